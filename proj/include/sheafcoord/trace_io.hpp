#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include "sheafcoord/admm.hpp"
#include "sheafcoord/dynamics.hpp"

// Trace files:
//   CSV:  header "iter,primal_residual,dual_residual,objective", one row per iteration.
//   JSON: {"status": ..., "x": [[...] per vertex], "delta_x": [[...] per edge]}
// Reals are printed with 17 significant digits so they parse back bit-exactly.

namespace sheafcoord {

inline constexpr const char* kTraceCsvHeader = "iter,primal_residual,dual_residual,objective";

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_solve_csv(std::ostream& os, const SolveTrace& trace) {
  os << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    os << r.iter << ',' << format_real(r.primal_residual) << ',' << format_real(r.dual_residual) << ','
       << format_real(r.objective) << '\n';
  }
}

/// Flow traces reuse the solve schema: primal = ||delta x - b||_2, dual = max state change, objective = energy.
/// Every step after step 0 that was sampled becomes one row.
inline void write_flow_csv(std::ostream& os, const CellularSheaf& sheaf, const Cochain1& targets,
                           const FlowTrace& trace) {
  os << kTraceCsvHeader << '\n';
  for (const auto& s : trace.samples) {
    if (s.step == 0) continue;
    const double primal = (apply_coboundary(sheaf, s.state) - targets).norm();
    os << s.step << ',' << format_real(primal) << ',' << format_real(s.max_change) << ',' << format_real(s.energy)
       << '\n';
  }
}

namespace trace_detail {

template <class Tag>
void write_blocks(std::ostream& os, const Cochain<Tag>& c) {
  os << '[';
  for (std::size_t k = 0; k < c.blocks(); ++k) {
    if (k) os << ',';
    os << '[';
    const auto b = c.block(k);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      if (i) os << ',';
      os << (std::isfinite(b(i)) ? format_real(b(i)) : std::string("null"));
    }
    os << ']';
  }
  os << ']';
}

}  // namespace trace_detail

inline void write_terminal_json(std::ostream& os, const std::string& status, const CellularSheaf& sheaf,
                                const Cochain0& x) {
  os << "{\"status\":\"" << status << "\",\"x\":";
  trace_detail::write_blocks(os, x);
  os << ",\"delta_x\":";
  trace_detail::write_blocks(os, apply_coboundary(sheaf, x));
  os << "}\n";
}

}  // namespace sheafcoord
