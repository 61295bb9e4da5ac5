#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ddfc/funnel.hpp"
#include "ddfc/supervisor.hpp"

namespace ddfc {

inline constexpr std::string_view kCsvHeader = "t,y,y_ref,funnel,e1_norm,e2_norm,u,branch,L_used,obj,iters";

/// One trace row. Vector fields print their components separated by ';'.
/// e2_norm is nan for relative degree one.
struct CsvRow {
  double t = 0.0;
  VectorXd y;
  VectorXd y_ref;
  double funnel = 0.0;
  double e1_norm = 0.0;
  double e2_norm = 0.0;
  VectorXd u;
  Branch branch = Branch::Random;
  long long L_used = 0;
  double obj = 0.0;
  long long iters = 0;
};

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

std::vector<CsvRow> to_rows(const TrajectoryLog& log, const FunnelSpec& funnel);

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);

/// Throws Error on a wrong header or a malformed field (with the line number).
std::vector<CsvRow> read_csv(std::istream& in);

}  // namespace ddfc
