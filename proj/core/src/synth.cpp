#include "hdnn/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "hdnn/data.hpp"
#include "hdnn/errors.hpp"
#include "hdnn/rng.hpp"

namespace hdnn {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// Smooth pseudo-random background: a short sum of sinusoids.
struct SmoothSignal {
  struct Wave {
    double amplitude, wavelength, phase;
  };
  std::vector<Wave> waves;

  static SmoothSignal draw(RngStream& rng, std::size_t count, double min_wavelength,
                           double max_wavelength) {
    SmoothSignal s;
    for (std::size_t i = 0; i < count; ++i) {
      s.waves.push_back({rng.next_range(0.5, 1.0), rng.next_range(min_wavelength, max_wavelength),
                         rng.next_range(0.0, 2.0 * kPi)});
    }
    return s;
  }

  double operator()(double z) const {
    double acc = 0.0;
    for (const Wave& w : waves) acc += w.amplitude * std::sin(2.0 * kPi * z / w.wavelength + w.phase);
    return acc / static_cast<double>(waves.empty() ? 1 : waves.size());
  }
};

struct QualityBump {
  double center, width, amplitude;
};

// Latent reservoir quality along depth.
struct QualitySignal {
  std::vector<QualityBump> bumps;
  SmoothSignal background;

  double operator()(double z) const {
    double q = 0.1 * background(z);
    for (const QualityBump& b : bumps) {
      const double d = (z - b.center) / b.width;
      q += b.amplitude * std::exp(-0.5 * d * d);
    }
    return q;
  }
};

struct WellPlan {
  std::string id;
  double curve_top, curve_base;
  struct Formation {
    std::string id;
    double top, base;
    double perf_top, perf_base;
    long perf_count;
  };
  std::vector<Formation> formations;
  QualitySignal quality;
  SmoothSignal nuisance[6];
};

}  // namespace

void synth_generate(const SynthConfig& config, const std::string& directory) {
  if (config.spacing_m <= 0.0) throw ValueError("synth: spacing must be > 0");
  if (config.min_formations < 1 || config.max_formations < config.min_formations) {
    throw ValueError("synth: formation count range is invalid");
  }

  RngStream rng(config.seed);
  std::vector<WellPlan> wells;
  wells.reserve(config.wells);

  for (std::size_t w = 0; w < config.wells; ++w) {
    WellPlan plan;
    char id[16];
    std::snprintf(id, sizeof(id), "W%04zu", w + 1);
    plan.id = id;

    const double block_top = rng.next_range(1500.0, 2400.0);
    const std::size_t formation_count =
        config.min_formations + rng.next_index(config.max_formations - config.min_formations + 1);

    double cursor = block_top;
    for (std::size_t f = 0; f < formation_count; ++f) {
      WellPlan::Formation fm;
      fm.id = "F" + std::to_string(f + 1);
      const double thickness = rng.next_range(18.0, 30.0);
      fm.top = cursor;
      fm.base = cursor + thickness;
      const double perf_len = thickness * rng.next_range(0.35, 0.55);
      fm.perf_top = fm.top + rng.next_range(0.0, thickness - perf_len);
      fm.perf_base = fm.perf_top + perf_len;
      fm.perf_count = 2 + static_cast<long>(rng.next_index(7));  // 2..8
      plan.formations.push_back(fm);
      cursor = fm.base + rng.next_range(4.0, 12.0);
    }
    plan.curve_top = block_top - 5.0;
    plan.curve_base = plan.formations.back().base + 5.0;

    const std::size_t bump_count = 3 + rng.next_index(4);  // 3..6
    for (std::size_t b = 0; b < bump_count; ++b) {
      plan.quality.bumps.push_back({rng.next_range(plan.curve_top, plan.curve_base),
                                    rng.next_range(1.5, 5.0), rng.next_range(0.6, 1.6)});
    }
    plan.quality.background = SmoothSignal::draw(rng, 3, 40.0, 160.0);
    for (auto& n : plan.nuisance) n = SmoothSignal::draw(rng, 3, 25.0, 120.0);

    wells.push_back(std::move(plan));
  }

  // attributes.csv
  {
    std::ofstream out(directory + "/attributes.csv", std::ios::trunc);
    if (!out) throw IoError("synth: cannot write " + directory + "/attributes.csv");
    out << "well_id,formation_id,formation_top_m,formation_base_m,perforation_thickness_m,"
           "perforation_count";
    if (config.emit_labels) out << ",production_t_per_d";
    out << "\n";

    for (const WellPlan& well : wells) {
      for (const auto& fm : well.formations) {
        out << well.id << ',' << fm.id << ',' << format_double(fm.top) << ','
            << format_double(fm.base) << ',' << format_double(fm.perf_base - fm.perf_top) << ','
            << fm.perf_count;
        if (config.emit_labels) {
          // Exceedance integral over the perforated interval, fine trapezoid.
          const double step = 0.05;
          const auto n = static_cast<std::size_t>(std::ceil((fm.perf_base - fm.perf_top) / step));
          double integral = 0.0;
          double prev = std::max(well.quality(fm.perf_top) - config.quality_threshold, 0.0);
          for (std::size_t i = 1; i <= n; ++i) {
            const double z = fm.perf_top + (fm.perf_base - fm.perf_top) * static_cast<double>(i) /
                                               static_cast<double>(n);
            const double cur = std::max(well.quality(z) - config.quality_threshold, 0.0);
            integral += 0.5 * (prev + cur) * (fm.perf_base - fm.perf_top) / static_cast<double>(n);
            prev = cur;
          }
          const double count_factor = std::pow(static_cast<double>(fm.perf_count), 0.3);
          double production = config.production_scale * integral * count_factor;
          production *= 1.0 + config.label_noise * rng.next_normal(0.0, 1.0);
          production += 0.3 * std::abs(rng.next_normal(0.0, 1.0));
          production = std::max(production, 0.1);
          out << ',' << format_double(production);
        }
        out << "\n";
      }
    }
    if (!out) throw IoError("synth: write failed for attributes.csv");
  }

  // curves.csv
  {
    std::ofstream out(directory + "/curves.csv", std::ios::trunc);
    if (!out) throw IoError("synth: cannot write " + directory + "/curves.csv");
    out << "well_id,depth_m";
    for (const char* name : kCurveChannelNames) out << ',' << name;
    out << "\n";

    for (const WellPlan& well : wells) {
      const auto samples = static_cast<std::size_t>(
          std::floor((well.curve_base - well.curve_top) / config.spacing_m)) + 1;
      for (std::size_t s = 0; s < samples; ++s) {
        const double z = well.curve_top + static_cast<double>(s) * config.spacing_m;
        const double q = well.quality(z);
        const double cn = config.channel_noise;
        const double cal = 8.5 + 0.9 * well.nuisance[0](z) + 0.05 * q +
                           0.05 * cn * rng.next_normal(0.0, 1.0);
        const double ac = 210.0 + 55.0 * q + 12.0 * well.nuisance[1](z) +
                          2.0 * cn * rng.next_normal(0.0, 1.0);
        const double gr = 95.0 - 38.0 * q + 10.0 * well.nuisance[2](z) +
                          2.0 * cn * rng.next_normal(0.0, 1.0);
        const double lld = std::exp(2.8 + 1.1 * q + 0.25 * well.nuisance[3](z) +
                                    0.05 * cn * rng.next_normal(0.0, 1.0));
        const double lls = std::exp(2.6 + 0.95 * q + 0.22 * well.nuisance[3](z) +
                                    0.07 * cn * rng.next_normal(0.0, 1.0));
        const double sp = -15.0 - 18.0 * q + 8.0 * well.nuisance[4](z) +
                          1.0 * cn * rng.next_normal(0.0, 1.0);
        const double vsh = std::clamp(0.55 - 0.28 * q + 0.12 * well.nuisance[5](z) +
                                          0.02 * cn * rng.next_normal(0.0, 1.0),
                                      0.01, 0.99);

        out << well.id << ',' << format_double(z);
        for (double v : {cal, ac, gr, lld, lls, sp, vsh}) out << ',' << format_double(v);
        out << "\n";
      }
    }
    if (!out) throw IoError("synth: write failed for curves.csv");
  }
}

}  // namespace hdnn
