#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sbss/csv.hpp"
#include "sbss/estimators.hpp"
#include "sbss/mdi.hpp"
#include "sbss/simulation.hpp"

namespace sbss {

// ============================================================================
// Campaign configuration
// ============================================================================

struct EstimatorSpec {
  std::string label;  // e.g. "LCov Ball"
  Method method;
  std::vector<KernelSpec> kernels;
};

struct CampaignConfig {
  std::vector<double> domains{10.0, 20.0, 30.0, 40.0};
  Pattern pattern = Pattern::Uniform;
  std::vector<CovModel> cov_models;
  DriftModel drift;
  std::vector<EstimatorSpec> estimators;
  int replicates = 200;
  std::uint64_t master_seed = 20240601;
  std::string output_dir = "out";
  /// Mix with a random well-conditioned A per replicate instead of A = I.
  /// The methods are affine equivariant, so MDI statistics are unchanged.
  bool random_mixing = false;
  bool emit_svg = true;
};

inline std::string pattern_name(Pattern p) { return p == Pattern::Uniform ? "uniform" : "skew"; }

inline std::string drift_name(const DriftModel& d) {
  switch (d.kind) {
    case DriftModel::Kind::Zero: return "zero";
    case DriftModel::Kind::RadialLog: return "radial_log";
    case DriftModel::Kind::LinearX: return "linear_x";
    case DriftModel::Kind::BlockCluster: return "block_cluster";
  }
  return "?";
}

/// The paper's five estimators with their kernel configurations.
inline std::vector<EstimatorSpec> default_estimators() {
  return {
      {"LCov Ball", Method::LCovSD, {KernelSpec::ball(1.0)}},
      {"LCov Ring", Method::LCovJD,
       {KernelSpec::ring(0.0, 1.0), KernelSpec::ring(1.0, 2.0), KernelSpec::ring(2.0, 3.0)}},
      {"LDiff Ball", Method::LDiffSD, {KernelSpec::ball(1.0)}},
      {"wLDiff Ring", Method::LDiffWhitened, {KernelSpec::ring(0.0, 1.0), KernelSpec::ring(1.0, 2.0)}},
      {"FOBI", Method::FOBI, {}},
  };
}

inline std::vector<CovModel> default_matern_models() {
  return {CovModel::matern(1.0, 0.5, 1.0), CovModel::matern(1.0, 0.9, 1.7),
          CovModel::matern(1.0, 1.3, 2.2)};
}

/// `desk` keeps the study tractable on a workstation; `full` is the complete
/// grid (2000 replicates, domains up to 60x60 -- hours of compute).
inline CampaignConfig campaign_preset(const std::string& name) {
  CampaignConfig cfg;
  cfg.cov_models = default_matern_models();
  cfg.estimators = default_estimators();
  if (name == "desk") {
    cfg.domains = {10.0, 20.0, 30.0, 40.0};
    cfg.replicates = 200;
  } else if (name == "full") {
    cfg.domains = {10.0, 20.0, 30.0, 40.0, 50.0, 60.0};
    cfg.replicates = 2000;
  } else {
    throw SchemaError(detail::str("unknown preset '", name, "' (expected desk or full)"));
  }
  return cfg;
}

inline void validate_estimator_spec(const EstimatorSpec& e) {
  const std::size_t k = e.kernels.size();
  switch (e.method) {
    case Method::LCovSD:
    case Method::LDiffSD:
      if (k != 1) throw SchemaError(detail::str("estimator '", e.label, "': needs exactly 1 kernel"));
      break;
    case Method::LCovJD:
      if (k < 1) throw SchemaError(detail::str("estimator '", e.label, "': needs at least 1 kernel"));
      break;
    case Method::LDiffWhitened:
      if (k != 2) throw SchemaError(detail::str("estimator '", e.label, "': needs exactly 2 kernels"));
      break;
    case Method::FOBI:
      if (k != 0) throw SchemaError(detail::str("estimator '", e.label, "': takes no kernels"));
      break;
  }
}

inline CampaignConfig parse_campaign_config(const nlohmann::json& j) {
  CampaignConfig cfg;
  try {
    if (j.contains("domains")) cfg.domains = j.at("domains").get<std::vector<double>>();
    if (j.contains("pattern")) {
      const std::string p = j.at("pattern").get<std::string>();
      if (p == "uniform") cfg.pattern = Pattern::Uniform;
      else if (p == "skew") cfg.pattern = Pattern::Skew;
      else throw SchemaError(detail::str("pattern '", p, "' (expected uniform or skew)"));
    }
    if (j.contains("cov_models")) {
      cfg.cov_models.clear();
      for (const auto& m : j.at("cov_models")) {
        const std::string kind = m.at("kind").get<std::string>();
        if (kind == "matern")
          cfg.cov_models.push_back(CovModel::matern(m.at("sigma2").get<double>(),
                                                    m.at("nu").get<double>(),
                                                    m.at("phi").get<double>()));
        else if (kind == "fbm")
          cfg.cov_models.push_back(CovModel::fbm(m.at("hurst").get<double>()));
        else
          throw SchemaError(detail::str("cov model kind '", kind, "' (expected matern or fbm)"));
      }
    } else {
      cfg.cov_models = default_matern_models();
    }
    if (j.contains("drift")) {
      const auto& d = j.at("drift");
      const std::string kind = d.at("kind").get<std::string>();
      if (kind == "zero") {
        cfg.drift = DriftModel::zero();
      } else if (kind == "radial_log" || kind == "linear_x") {
        const auto c = d.at("coeffs").get<std::vector<double>>();
        Eigen::VectorXd coeffs = Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
        cfg.drift = (kind == "radial_log") ? DriftModel::radial_log(std::move(coeffs))
                                           : DriftModel::linear_x(std::move(coeffs));
      } else if (kind == "block_cluster") {
        cfg.drift = DriftModel::block_cluster(d.value("clusters", 3), d.value("value_max", 3.0));
      } else {
        throw SchemaError(detail::str("drift kind '", kind,
                                      "' (expected zero, radial_log, linear_x, block_cluster)"));
      }
    }
    if (j.contains("estimators")) {
      cfg.estimators.clear();
      for (const auto& e : j.at("estimators")) {
        EstimatorSpec spec;
        spec.method = parse_method(e.at("method").get<std::string>());
        spec.label = e.value("name", method_name(spec.method));
        if (e.contains("kernels"))
          for (const auto& k : e.at("kernels"))
            spec.kernels.push_back(KernelSpec::parse(k.get<std::string>()));
        cfg.estimators.push_back(std::move(spec));
      }
    } else {
      cfg.estimators = default_estimators();
    }
    if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<int>();
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("random_mixing")) cfg.random_mixing = j.at("random_mixing").get<bool>();
    if (j.contains("emit_svg")) cfg.emit_svg = j.at("emit_svg").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(detail::str("campaign config: ", e.what()));
  } catch (const Error& e) {
    throw SchemaError(detail::str("campaign config: ", e.what()));
  }

  if (cfg.replicates < 1) throw SchemaError("campaign config: replicates must be >= 1");
  if (cfg.domains.empty()) throw SchemaError("campaign config: no domains");
  for (double l : cfg.domains)
    if (!(l > 1.0)) throw SchemaError(detail::str("campaign config: domain side ", l, " too small"));
  if (cfg.cov_models.size() < 2) throw SchemaError("campaign config: need p >= 2 covariance models");
  if (cfg.estimators.empty()) throw SchemaError("campaign config: no estimators");
  for (const auto& e : cfg.estimators) validate_estimator_spec(e);
  if ((cfg.drift.kind == DriftModel::Kind::RadialLog || cfg.drift.kind == DriftModel::Kind::LinearX) &&
      cfg.drift.coeffs.size() != static_cast<Eigen::Index>(cfg.cov_models.size()))
    throw SchemaError("campaign config: drift coefficient count must match cov model count");
  return cfg;
}

inline CampaignConfig load_campaign_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(detail::str("cannot open config '", path, "'"));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(detail::str("config '", path, "': ", e.what()));
  }
  return parse_campaign_config(j);
}

// ============================================================================
// Campaign execution
// ============================================================================

struct ReplicateOutcome {
  bool ok = false;
  double mdi = 0.0;
  double seconds = 0.0;  // wall clock, reported in summary.csv only
  std::string error;
};

struct CellSummary {
  double domain;
  std::string estimator;
  std::size_t ok = 0, failed = 0;
  double mean_mdi = 0.0, se_mdi = 0.0, mean_seconds = 0.0;
};

struct CampaignResult {
  CampaignConfig config;
  /// outcomes[domain_idx][replicate][estimator_idx]
  std::vector<std::vector<std::vector<ReplicateOutcome>>> outcomes;

  const ReplicateOutcome& at(std::size_t domain_idx, int replicate, std::size_t est_idx) const {
    return outcomes[domain_idx][replicate][est_idx];
  }

  /// Replicate MDI values of one (domain, estimator) cell, failures skipped.
  std::vector<double> cell_mdis(std::size_t domain_idx, std::size_t est_idx) const {
    std::vector<double> v;
    v.reserve(outcomes[domain_idx].size());
    for (const auto& rep : outcomes[domain_idx])
      if (rep[est_idx].ok) v.push_back(rep[est_idx].mdi);
    return v;
  }

  std::vector<CellSummary> summaries() const {
    std::vector<CellSummary> out;
    for (std::size_t d = 0; d < config.domains.size(); ++d) {
      for (std::size_t e = 0; e < config.estimators.size(); ++e) {
        CellSummary s;
        s.domain = config.domains[d];
        s.estimator = config.estimators[e].label;
        double sum = 0.0, time_sum = 0.0;
        for (const auto& rep : outcomes[d]) {
          const auto& o = rep[e];
          if (o.ok) {
            ++s.ok;
            sum += o.mdi;
            time_sum += o.seconds;
          } else {
            ++s.failed;
          }
        }
        if (s.ok > 0) {
          s.mean_mdi = sum / static_cast<double>(s.ok);
          s.mean_seconds = time_sum / static_cast<double>(s.ok);
          double ss = 0.0;
          for (const auto& rep : outcomes[d])
            if (rep[e].ok) ss += (rep[e].mdi - s.mean_mdi) * (rep[e].mdi - s.mean_mdi);
          if (s.ok > 1) s.se_mdi = std::sqrt(ss / static_cast<double>(s.ok - 1) / static_cast<double>(s.ok));
        }
        out.push_back(std::move(s));
      }
    }
    return out;
  }
};

namespace detail {

inline UnmixingResult run_estimator(const EstimatorSpec& spec, const FieldSample& sample) {
  switch (spec.method) {
    case Method::LCovSD: return sbss_sd(sample, spec.kernels.at(0));
    case Method::LCovJD: return sbss_jd(sample, spec.kernels);
    case Method::LDiffSD: return sbss_ldiff(sample, spec.kernels.at(0));
    case Method::LDiffWhitened:
      return sbss_ldiff_whitened(sample, spec.kernels.at(0), spec.kernels.at(1));
    case Method::FOBI: return fobi(sample);
  }
  throw Error("run_estimator: unknown method");
}

/// Random invertible mixing matrix with a bounded condition number so the
/// equivariance identity survives floating point.
inline Eigen::MatrixXd random_mixing_matrix(Eigen::Index p, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXd a(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const double cond = svd.singularValues()(0) / svd.singularValues()(p - 1);
    if (std::isfinite(cond) && cond < 50.0) return a;
  }
  throw Error("random_mixing_matrix: could not draw a well-conditioned matrix");
}

}  // namespace detail

/// Runs every (domain, replicate, estimator) cell of the campaign. Replicates
/// are distributed over `jobs` worker threads; every replicate derives its
/// generator streams from (master_seed, domain, replicate index), so results
/// do not depend on scheduling and are byte-stable across worker counts.
inline CampaignResult run_campaign(const CampaignConfig& config, int jobs = 0) {
  for (const auto& e : config.estimators) validate_estimator_spec(e);
  const std::size_t n_domains = config.domains.size();
  const std::size_t n_est = config.estimators.size();
  const int reps = config.replicates;

  CampaignResult result;
  result.config = config;
  result.outcomes.assign(n_domains,
                         std::vector<std::vector<ReplicateOutcome>>(
                             reps, std::vector<ReplicateOutcome>(n_est)));

  struct Task {
    std::size_t domain_idx;
    int replicate;
  };
  std::vector<Task> tasks;
  tasks.reserve(n_domains * static_cast<std::size_t>(reps));
  for (std::size_t d = 0; d < n_domains; ++d)
    for (int r = 0; r < reps; ++r) tasks.push_back({d, r});

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      const Task task = tasks[idx];
      const double l = config.domains[task.domain_idx];
      auto& slots = result.outcomes[task.domain_idx][task.replicate];

      const std::uint64_t domain_tag = static_cast<std::uint64_t>(std::llround(l * 1024.0));
      const std::uint64_t cell =
          derive_seed(derive_seed(config.master_seed, domain_tag),
                      static_cast<std::uint64_t>(task.replicate));
      try {
        Rng rng_loc(derive_seed(cell, 1));
        Rng rng_latent(derive_seed(cell, 2));
        Rng rng_drift(derive_seed(cell, 3));
        Rng rng_mix(derive_seed(cell, 4));

        const LocationSet locs = sample_locations(DomainSpec(l, config.pattern), rng_loc);
        Eigen::MatrixXd z = simulate_latent(locs, config.cov_models, rng_latent);
        const Eigen::Index p = z.cols();

        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(p, p);
        if (config.random_mixing) {
          a = detail::random_mixing_matrix(p, rng_mix);
          z = mix(z, a);
        }
        DriftedSample drifted = apply_drift(z, locs, config.drift, l, rng_drift);

        for (std::size_t e = 0; e < n_est; ++e) {
          auto& out = slots[e];
          const auto t0 = std::chrono::steady_clock::now();
          try {
            const UnmixingResult un = detail::run_estimator(config.estimators[e], drifted.sample);
            out.mdi = mdi(un.w * a);
            out.ok = true;
          } catch (const std::exception& ex) {
            out.ok = false;
            out.error = ex.what();
          }
          out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
      } catch (const std::exception& ex) {
        for (auto& out : slots) {
          out.ok = false;
          out.error = detail::str("simulation: ", ex.what());
        }
      }
    }
  };

  int n_threads = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min<int>(n_threads, static_cast<int>(tasks.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

// ============================================================================
// Output files
// ============================================================================

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

/// Long-format replicate table. Deterministic given (config, master_seed):
/// wall-clock timings deliberately live in summary.csv instead, so this file
/// can be compared byte-for-byte across runs and worker counts.
inline void write_results_csv(const CampaignResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(detail::str("cannot write '", path, "'"));
  const auto& cfg = result.config;
  out << "domain,pattern,drift,estimator,replicate,mdi,error\n";
  for (std::size_t d = 0; d < cfg.domains.size(); ++d) {
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      for (int r = 0; r < cfg.replicates; ++r) {
        const auto& o = result.at(d, r, e);
        out << detail::format_double(cfg.domains[d]) << ',' << pattern_name(cfg.pattern) << ','
            << drift_name(cfg.drift) << ',' << csv::quote_field(cfg.estimators[e].label, ',') << ','
            << r << ',';
        if (o.ok) out << detail::format_double(o.mdi);
        out << ',' << csv::quote_field(o.error, ',') << '\n';
      }
    }
  }
}

inline void write_summary_csv(const CampaignResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(detail::str("cannot write '", path, "'"));
  const auto& cfg = result.config;
  out << "domain,pattern,drift,estimator,replicates,failures,mean_mdi,se_mdi,mean_seconds\n";
  for (const auto& s : result.summaries()) {
    out << detail::format_double(s.domain) << ',' << pattern_name(cfg.pattern) << ','
        << drift_name(cfg.drift) << ',' << csv::quote_field(s.estimator, ',') << ',' << s.ok << ','
        << s.failed << ',';
    if (s.ok > 0) out << detail::format_double(s.mean_mdi) << ',' << detail::format_double(s.se_mdi);
    else out << ',';
    out << ',' << detail::format_double(s.mean_seconds) << '\n';
  }
}

// ============================================================================
// SVG line plot (mean MDI vs domain size, one polyline per estimator)
// ============================================================================

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (domain, mean mdi)
};

inline void write_mdi_svg(const std::vector<PlotSeries>& series, const std::string& path,
                          const std::string& title = "Mean MDI by domain size") {
  const int width = 640, height = 440;
  const double ml = 60, mr = 170, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_min = 1e300, x_max = -1e300, y_max = 0.0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_max = std::max(y_max, y);
    }
  if (!(x_max > x_min)) {
    x_min -= 1.0;
    x_max += 1.0;
  }
  y_max = std::min(1.0, std::max(0.1, y_max * 1.1));

  auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double y) { return mt + ph - y / y_max * ph; };

  static const char* palette[] = {"#1b6ca8", "#d1495b", "#3a7d44", "#f2a541", "#6f42c1",
                                  "#2ab7ca", "#8d5524"};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(detail::str("cannot write '", path, "'"));
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" << title
      << "</text>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";
  // y ticks
  for (int t = 0; t <= 5; ++t) {
    const double y = y_max * t / 5.0;
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(y) << "\" x2=\"" << ml << "\" y2=\"" << py(y)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << py(y) + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << detail::format_double(std::round(y * 1000.0) / 1000.0) << "</text>\n";
  }
  // x ticks at the distinct domain values of the first series
  if (!series.empty()) {
    for (const auto& [x, y] : series.front().points) {
      (void)y;
      out << "<line x1=\"" << px(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(x) << "\" y2=\""
          << mt + ph + 4 << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << px(x) << "\" y=\"" << mt + ph + 18
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
          << detail::format_double(x) << "</text>\n";
    }
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">domain side"
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << mt + ph / 2 << ")\">mean MDI</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % (sizeof(palette) / sizeof(palette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[s].points) out << px(x) << ',' << py(y) << ' ';
    out << "\"/>\n";
    for (const auto& [x, y] : series[s].points)
      out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    // legend
    const double ly = mt + 16 + 20.0 * static_cast<double>(s);
    out << "<line x1=\"" << ml + pw + 14 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 38
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << ml + pw + 44 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
}

inline std::vector<PlotSeries> mdi_series(const CampaignResult& result) {
  std::vector<PlotSeries> series;
  const auto sums = result.summaries();
  for (std::size_t e = 0; e < result.config.estimators.size(); ++e) {
    PlotSeries s;
    s.label = result.config.estimators[e].label;
    for (const auto& cell : sums)
      if (cell.estimator == s.label && cell.ok > 0) s.points.emplace_back(cell.domain, cell.mean_mdi);
    series.push_back(std::move(s));
  }
  return series;
}

/// Runs the campaign and writes results.csv, summary.csv and (optionally)
/// mdi_curves.svg into config.output_dir.
inline CampaignResult cmd_simulate(const CampaignConfig& config, int jobs = 0) {
  CampaignResult result = run_campaign(config, jobs);
  std::filesystem::create_directories(config.output_dir);
  write_results_csv(result, config.output_dir + "/results.csv");
  write_summary_csv(result, config.output_dir + "/summary.csv");
  if (config.emit_svg) write_mdi_svg(mdi_series(result), config.output_dir + "/mdi_curves.svg");
  return result;
}

}  // namespace sbss
