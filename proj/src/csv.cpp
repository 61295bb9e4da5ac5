#include "ddfc/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "ddfc/errors.hpp"

namespace ddfc {

namespace {

std::string format_vector(const VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v(i));
  }
  return out;
}

double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("bad number '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("bad integer '" + std::string(s) + "'");
  }
  return v;
}

VectorXd parse_vector(std::string_view s) {
  std::vector<double> vals;
  std::size_t start = 0;
  while (true) {
    const auto semi = s.find(';', start);
    vals.push_back(parse_double(s.substr(start, semi == std::string_view::npos ? semi : semi - start)));
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  return Eigen::Map<VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Branch parse_branch(std::string_view s) {
  if (s == "random") return Branch::Random;
  if (s == "mpc") return Branch::Mpc;
  if (s == "zoh") return Branch::Zoh;
  throw Error("bad branch '" + std::string(s) + "'");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::vector<CsvRow> to_rows(const TrajectoryLog& log, const FunnelSpec& funnel) {
  std::vector<CsvRow> rows;
  rows.reserve(log.records.size());
  for (const auto& rec : log.records) {
    CsvRow row;
    row.t = rec.t;
    row.y = rec.xi.head(rec.u.size());
    row.y_ref = rec.y_ref;
    row.funnel = funnel.radius(rec.t);
    row.e1_norm = rec.e.at(0).norm();
    row.e2_norm = rec.e.size() > 1 ? rec.e[1].norm() : std::numeric_limits<double>::quiet_NaN();
    row.u = rec.u;
    row.branch = rec.branch;
    row.L_used = rec.L_used;
    if (rec.branch == Branch::Mpc) {
      row.obj = rec.objective;
      row.iters = rec.iterations;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << format_vector(r.y) << ',' << format_vector(r.y_ref) << ','
        << format_double(r.funnel) << ',' << format_double(r.e1_norm) << ','
        << format_double(r.e2_norm) << ',' << format_vector(r.u) << ',' << to_string(r.branch) << ','
        << r.L_used << ',' << format_double(r.obj) << ',' << r.iters << '\n';
  }
}

std::vector<CsvRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error("csv: unexpected header");
  std::vector<CsvRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view s = line;
    std::size_t start = 0;
    while (true) {
      const auto comma = s.find(',', start);
      f.push_back(s.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    try {
      if (f.size() != 11) throw Error("expected 11 fields, got " + std::to_string(f.size()));
      CsvRow r;
      r.t = parse_double(f[0]);
      r.y = parse_vector(f[1]);
      r.y_ref = parse_vector(f[2]);
      r.funnel = parse_double(f[3]);
      r.e1_norm = parse_double(f[4]);
      r.e2_norm = parse_double(f[5]);
      r.u = parse_vector(f[6]);
      r.branch = parse_branch(f[7]);
      r.L_used = parse_int(f[8]);
      r.obj = parse_double(f[9]);
      r.iters = parse_int(f[10]);
      rows.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error("csv line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace ddfc
