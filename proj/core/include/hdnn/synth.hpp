#pragma once

#include <cstdint>
#include <string>

namespace hdnn {

/// Synthetic well-block generator. Each well carries a latent depth-dependent
/// quality signal built from a few Gaussian bumps plus smooth background; the
/// seven log channels are fixed nonlinear noisy transforms of that signal and
/// of independent nuisance signals. A formation's production is driven by the
/// thresholded-quality integral over a randomly placed perforated
/// sub-interval, scaled by a mild power of the perforation count - so
/// formation-mean channel values carry only weak label information while the
/// curve shapes carry a lot.
struct SynthConfig {
  std::size_t wells = 180;
  std::size_t min_formations = 2;
  std::size_t max_formations = 4;
  std::uint64_t seed = 0;
  double spacing_m = 0.5;           // curve sample spacing
  double quality_threshold = 0.85;  // exceedance threshold on the latent signal
  double production_scale = 9.0;    // t/d per unit exceedance integral
  double label_noise = 0.12;        // relative label noise
  double channel_noise = 1.0;       // scales per-sample measurement noise
  bool emit_labels = true;          // false writes an unlabeled prediction set
};

/// Writes attributes.csv and curves.csv into `directory` (which must exist).
/// Byte-identical output for identical configs.
void synth_generate(const SynthConfig& config, const std::string& directory);

}  // namespace hdnn
