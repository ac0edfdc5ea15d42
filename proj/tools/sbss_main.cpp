// Command-line front end: simulation campaigns, single-dataset estimation,
// MDI scoring and plot regeneration.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage/schema error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "sbss/sbss.hpp"

namespace {

struct SimulateArgs {
  std::string config_path;
  std::string preset = "desk";
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

int run_simulate(const SimulateArgs& args) {
  sbss::CampaignConfig cfg = sbss::campaign_preset(args.preset);
  if (!args.config_path.empty()) {
    sbss::CampaignConfig from_file = sbss::load_campaign_config(args.config_path);
    // File settings win over the preset; flags win over the file.
    cfg = std::move(from_file);
  }
  if (args.seed_set) cfg.master_seed = args.seed;
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;

  const sbss::CampaignResult result = sbss::cmd_simulate(cfg, args.jobs);

  std::size_t failures = 0;
  for (const auto& s : result.summaries()) failures += s.failed;
  std::cout << "campaign done: " << cfg.domains.size() << " domains x " << cfg.replicates
            << " replicates x " << cfg.estimators.size() << " estimators, " << failures
            << " failed cells\n";
  std::cout << "wrote " << cfg.output_dir << "/results.csv, summary.csv";
  if (cfg.emit_svg) std::cout << ", mdi_curves.svg";
  std::cout << "\n";
  return 0;
}

struct EstimateArgs {
  std::string data_path;
  std::string method = "ldiff_whitened";
  std::vector<std::string> kernels;
  std::string out_dir = "out";
  bool compositional = false;
  bool standardize = false;
  int center = -1;  // -1 = method default
};

int run_estimate(const EstimateArgs& args) {
  sbss::EstimatorSpec spec;
  spec.method = sbss::parse_method(args.method);
  spec.label = args.method;
  for (const auto& k : args.kernels) spec.kernels.push_back(sbss::KernelSpec::parse(k));
  sbss::validate_estimator_spec(spec);

  const sbss::csv::SpatialDataset ds = sbss::csv::load_spatial(args.data_path);
  const sbss::LocationSet locs{ds.coords};

  namespace fs = std::filesystem;
  fs::create_directories(args.out_dir);

  sbss::UnmixingResult unmixing{Eigen::MatrixXd(), sbss::Method::FOBI, std::nullopt, true, false};
  std::unique_ptr<sbss::FieldSample> sample;
  std::vector<std::string> component_names;
  if (args.compositional) {
    sbss::Composition comp(ds.values, ds.names);
    auto [coords, contrast] = sbss::ilr_pivot(comp);
    sample = std::make_unique<sbss::FieldSample>(std::move(coords), locs);
    if (spec.method == sbss::Method::LDiffWhitened)
      unmixing = sbss::sbss_ldiff_whitened(*sample, spec.kernels.at(0), spec.kernels.at(1),
                                           args.standardize);
    else
      unmixing = sbss::detail::run_estimator(spec, *sample);
    const sbss::CombinedLoadings loadings =
        sbss::combined_loadings(contrast, unmixing, ds.names);
    std::ofstream out(args.out_dir + "/loadings.csv");
    out.precision(17);
    out << "part";
    for (Eigen::Index c = 0; c < loadings.table.cols(); ++c) out << ",z" << c + 1;
    out << '\n';
    for (Eigen::Index r = 0; r < loadings.table.rows(); ++r) {
      out << sbss::csv::quote_field(loadings.part_names[r], ',');
      for (Eigen::Index c = 0; c < loadings.table.cols(); ++c) out << ',' << loadings.table(r, c);
      out << '\n';
    }
  } else {
    sample = std::make_unique<sbss::FieldSample>(ds.values, locs);
    if (spec.method == sbss::Method::LDiffWhitened)
      unmixing = sbss::sbss_ldiff_whitened(*sample, spec.kernels.at(0), spec.kernels.at(1),
                                           args.standardize);
    else
      unmixing = sbss::detail::run_estimator(spec, *sample);
  }

  const bool center = (args.center == -1)
                          ? (unmixing.method != sbss::Method::LDiffWhitened)
                          : (args.center == 1);
  const Eigen::MatrixXd latent = sbss::recover_latent(*sample, unmixing, center);

  sbss::csv::save_matrix(args.out_dir + "/unmixing.csv", unmixing.w);
  if (unmixing.diag_values)
    sbss::csv::save_matrix(args.out_dir + "/diag_values.csv", *unmixing.diag_values);
  for (Eigen::Index c = 0; c < latent.cols(); ++c)
    component_names.push_back("z" + std::to_string(c + 1));
  sbss::csv::save_spatial(args.out_dir + "/latent.csv", ds.coords, latent, component_names);

  std::cout << "estimated " << args.method << " on " << ds.values.rows() << " locations, "
            << latent.cols() << " components";
  if (unmixing.near_tie_warning) std::cout << " (warning: near-tied diagonal values)";
  if (!unmixing.converged) std::cout << " (warning: joint diagonalization not converged)";
  std::cout << "\nwrote " << args.out_dir << "/unmixing.csv, latent.csv"
            << (unmixing.diag_values ? ", diag_values.csv" : "")
            << (args.compositional ? ", loadings.csv" : "") << "\n";
  return 0;
}

int run_mdi(const std::string& w_path, const std::string& a_path) {
  const Eigen::MatrixXd w = sbss::csv::load_matrix(w_path);
  const Eigen::MatrixXd a = sbss::csv::load_matrix(a_path);
  if (w.rows() != w.cols() || a.rows() != a.cols() || w.rows() != a.rows())
    throw sbss::SchemaError(sbss::detail::str("mdi: need square matrices of equal size, got ",
                                              w.rows(), "x", w.cols(), " and ", a.rows(), "x",
                                              a.cols()));
  std::printf("%.6f\n", sbss::mdi(w * a));
  return 0;
}

int run_plot(const std::string& input, const std::string& out_dir) {
  std::ifstream in(input);
  if (!in) throw sbss::SchemaError("cannot open '" + input + "'");
  std::string header_line;
  if (!std::getline(in, header_line)) throw sbss::SchemaError("'" + input + "': empty file");
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
  const auto header = sbss::csv::split_record(header_line, ',', 1);

  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int c_domain = col("domain"), c_est = col("estimator");
  const int c_mean = col("mean_mdi"), c_mdi = col("mdi");
  if (c_domain < 0 || c_est < 0 || (c_mean < 0 && c_mdi < 0))
    throw sbss::SchemaError("'" + input + "': expected a results.csv or summary.csv header");

  // (estimator, domain) -> running mean; estimator order preserved from file
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::pair<double, std::size_t>>> acc;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = sbss::csv::split_record(line, ',', line_no);
    const std::string est = fields.at(c_est);
    const double domain = sbss::csv::parse_number(fields.at(c_domain), line_no, "domain");
    const std::string value = fields.at(c_mean >= 0 ? c_mean : c_mdi);
    if (value.empty()) continue;  // failed replicate
    const double v = sbss::csv::parse_number(value, line_no, "mdi");
    if (acc.find(est) == acc.end()) order.push_back(est);
    auto& cell = acc[est][domain];
    cell.first += v;
    cell.second += 1;
  }

  std::vector<sbss::PlotSeries> series;
  for (const auto& est : order) {
    sbss::PlotSeries s;
    s.label = est;
    for (const auto& [domain, cell] : acc[est])
      s.points.emplace_back(domain, cell.first / static_cast<double>(cell.second));
    series.push_back(std::move(s));
  }
  std::filesystem::create_directories(out_dir);
  const std::string out_path = out_dir + "/mdi_curves.svg";
  sbss::write_mdi_svg(series, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial blind source separation: estimators, simulation harness, MDI scoring"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run a Monte-Carlo campaign over domain sizes");
  c_sim->add_option("--config", sim.config_path, "Campaign config (JSON)");
  c_sim->add_option("--preset", sim.preset, "Base preset: desk or full")
      ->check(CLI::IsMember({"desk", "full"}));
  c_sim->add_option("--seed", sim.seed, "Master seed override")->each([&](const std::string&) {
    sim.seed_set = true;
  });
  c_sim->add_option("--out", sim.out_dir, "Output directory override");
  c_sim->add_option("--jobs", sim.jobs, "Worker threads (0 = hardware)");

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Estimate an unmixing matrix from a CSV dataset");
  c_est->add_option("--data", est.data_path, "Input CSV (lon,lat,<vars...>)")->required();
  c_est->add_option("--method", est.method, "lcov_sd | lcov_jd | ldiff_sd | ldiff_whitened | fobi");
  c_est->add_option("--kernel", est.kernels, "Kernel spec (repeatable): ball:r ring:ri:ro gauss:r zero");
  c_est->add_option("--out", est.out_dir, "Output directory");
  c_est->add_flag("--compositional", est.compositional, "Treat columns as compositional parts (clr/ilr)");
  c_est->add_flag("--standardize", est.standardize, "Scale recovered components to unit variance");
  c_est->add_flag("--center{1},--no-center{0}", est.center, "Force centering on/off in latent recovery");

  std::string mdi_w, mdi_a;
  auto* c_mdi = app.add_subcommand("mdi", "Print the minimum distance index of W*A");
  c_mdi->add_option("w_csv", mdi_w, "Unmixing matrix CSV")->required();
  c_mdi->add_option("a_csv", mdi_a, "Mixing matrix CSV")->required();

  std::string plot_input, plot_out = "out";
  auto* c_plot = app.add_subcommand("plot", "Regenerate the MDI curve SVG from results/summary CSV");
  c_plot->add_option("--results", plot_input, "results.csv or summary.csv")->required();
  c_plot->add_option("--out", plot_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_est->parsed()) return run_estimate(est);
    if (c_mdi->parsed()) return run_mdi(mdi_w, mdi_a);
    if (c_plot->parsed()) return run_plot(plot_input, plot_out);
  } catch (const sbss::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
