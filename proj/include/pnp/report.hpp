#pragma once

#include <filesystem>
#include <fstream>

#include "pnp/field_io.hpp"

namespace pnp {

/// Per-step observables matching the time-series file columns.
struct StepReport {
  double time = 0.0;
  double energy = 0.0;
  double mass_n = 0.0;
  double mass_p = 0.0;
  double c_min = 0.0;
  double dissipation = 0.0;
  int picard_iters = 0;
  double residual = 0.0;
};

/// CSV time series, one row per reported step, flushed per row so an abort
/// never truncates what was already recorded.
class TimeSeriesWriter {
 public:
  explicit TimeSeriesWriter(const std::filesystem::path& path)
      : out_(path) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    out_ << "time,energy,mass_n,mass_p,c_min,dissipation,picard_iters,"
            "residual\n";
    out_.flush();
  }

  void write(const StepReport& r) {
    using detail::g17;
    out_ << g17(r.time) << ',' << g17(r.energy) << ',' << g17(r.mass_n) << ','
         << g17(r.mass_p) << ',' << g17(r.c_min) << ',' << g17(r.dissipation)
         << ',' << r.picard_iters << ',' << g17(r.residual) << '\n';
    out_.flush();
    if (!out_) throw Error("time series write failed");
  }

 private:
  std::ofstream out_;
};

}  // namespace pnp
