#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "emass/ema_io.hpp"
#include "emass/error.hpp"
#include "emass/estimation.hpp"
#include "emass/figures.hpp"
#include "emass/kalman.hpp"
#include "emass/model.hpp"
#include "emass/model_json.hpp"
#include "emass/particle.hpp"
#include "emass/rng.hpp"
#include "emass/scenario.hpp"
#include "emass/simulate.hpp"

namespace fs = std::filesystem;
using emass::Json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fnv1a_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw emass::Error(emass::ErrorCode::Io, "cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ULL;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 1099511628211ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

/// Flags, seed and input hashes of one run, written beside its outputs.
class Manifest {
 public:
  explicit Manifest(std::string command) { doc_["command"] = std::move(command); }

  template <typename T>
  void flag(const std::string& name, const T& value) {
    doc_["flags"][name] = value;
  }
  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void input(const std::string& path) { doc_["inputs"][path] = fnv1a_hex(path); }
  void output(const std::string& path) { doc_["outputs"].push_back(path); }

  void write(const fs::path& path) {
    doc_["version"] = kVersion;
    emass::write_file_atomic(path, doc_.dump(2) + "\n");
  }

 private:
  Json doc_ = Json::object();
};

/// Writes the summary beside the output and echoes it to stdout.
void write_summary(const fs::path& path, const std::string& text) {
  emass::write_file_atomic(path, text);
  std::cout << text;
}

fs::path sibling(const std::string& out, const std::string& suffix) { return fs::path(out + suffix); }

// simulate --------------------------------------------------------------------

struct SimulateArgs {
  std::string model, scenario, out;
  std::uint64_t seed = 0;
};

void run_simulate(const SimulateArgs& a) {
  const emass::ModelSpec spec = emass::load_model(a.model);
  emass::Scenario scenario = emass::scenario_from_json(emass::read_json_file(a.scenario));
  scenario.request.seed = a.seed;
  emass::EmaDataset data = emass::simulate_dataset(spec, scenario.request);
  for (std::size_t m = 0; m < scenario.missingness.size(); ++m) {
    data = emass::inject_missingness(data, scenario.missingness[m],
                                     emass::derive_seed(a.seed, m, 2));
  }
  emass::write_dataset(data, fs::path(a.out));

  Manifest manifest("simulate");
  manifest.flag("model", a.model);
  manifest.flag("scenario", a.scenario);
  manifest.flag("out", a.out);
  manifest.seed(a.seed);
  manifest.input(a.model);
  manifest.input(a.scenario);
  manifest.output(a.out);
  manifest.write(sibling(a.out, ".manifest.json"));

  long rows = 0;
  for (const auto& p : data.participants) rows += static_cast<long>(p.rows());
  const long cells = rows * static_cast<long>(data.n_obs());
  const long observed = data.observed_cells();
  std::ostringstream s;
  s << "simulated " << data.participants.size() << " participants, " << rows << " pings\n"
    << "observed cells " << observed << " of " << cells;
  if (cells > 0) {
    s << " (" << std::fixed << std::setprecision(1)
      << 100.0 * static_cast<double>(cells - observed) / static_cast<double>(cells)
      << "% missing)";
  }
  s << "\nwrote " << a.out << "\n";
  write_summary(sibling(a.out, ".summary.txt"), s.str());
}

// fit -------------------------------------------------------------------------

struct FitArgs {
  std::string data, templ, mode = "pooled", likelihood = "kalman", out;
  int restarts = 5;
  int particles = 1000;
  std::uint64_t seed = 0;
};

emass::LikelihoodKind likelihood_kind(const std::string& s) {
  return s == "particle" ? emass::LikelihoodKind::Particle : emass::LikelihoodKind::Kalman;
}

void run_fit(const FitArgs& a) {
  const emass::EmaDataset data = emass::read_dataset(fs::path(a.data));
  const emass::ModelTemplate model = emass::load_template(a.templ);
  emass::FitOptions options;
  options.n_restarts = a.restarts;
  options.likelihood = likelihood_kind(a.likelihood);
  options.n_particles = a.particles;
  options.seed = a.seed;
  if (options.likelihood == emass::LikelihoodKind::Particle && model.spec.all_gaussian()) {
    std::cerr << "warning: every channel is Gaussian; --likelihood kalman is exact and faster\n";
  }
  const emass::FitMode mode =
      a.mode == "idiographic" ? emass::FitMode::Idiographic : emass::FitMode::Pooled;
  const auto results = emass::fit(model, data, mode, options);

  Json doc;
  doc["model_id"] = model.id;
  doc["mode"] = a.mode;
  doc["likelihood"] = a.likelihood;
  doc["results"] = Json::array();
  for (const auto& r : results) doc["results"].push_back(emass::fit_result_to_json(r));
  emass::write_file_atomic(a.out, doc.dump(2) + "\n");

  Manifest manifest("fit");
  manifest.flag("data", a.data);
  manifest.flag("template", a.templ);
  manifest.flag("mode", a.mode);
  manifest.flag("likelihood", a.likelihood);
  manifest.flag("restarts", a.restarts);
  manifest.flag("particles", a.particles);
  manifest.flag("out", a.out);
  manifest.seed(a.seed);
  manifest.input(a.data);
  manifest.input(a.templ);
  manifest.output(a.out);
  manifest.write(sibling(a.out, ".manifest.json"));

  std::ostringstream s;
  s << "model " << model.id << ", " << a.mode << " fit, " << a.likelihood << " likelihood\n";
  s << std::setprecision(6);
  for (const auto& r : results) {
    s << (r.participant.empty() ? std::string("pooled") : r.participant) << ": loglik "
      << r.log_likelihood << ", k " << r.n_free << ", aic " << r.aic << ", bic " << r.bic
      << (r.converged ? ", converged" : ", not converged") << "\n";
  }
  s << "wrote " << a.out << "\n";
  write_summary(sibling(a.out, ".summary.txt"), s.str());
}

// filter ----------------------------------------------------------------------

struct FilterArgs {
  std::string model, data, likelihood = "kalman", out;
  bool smooth = false;
  int particles = 1000;
  std::uint64_t seed = 0;
};

void run_filter(const FilterArgs& a) {
  const emass::ModelSpec spec = emass::load_model(a.model);
  const emass::EmaDataset data = emass::read_dataset(fs::path(a.data));
  const bool particle = a.likelihood == "particle";
  if (particle && a.smooth) {
    throw emass::Error(emass::ErrorCode::LikelihoodModeMismatch,
                       "smoothing needs the kalman filter");
  }
  if (particle && spec.all_gaussian()) {
    std::cerr << "warning: every channel is Gaussian; --likelihood kalman is exact and faster\n";
  }
  const int n = spec.n_states;

  std::ostringstream table;
  table << "participant_id,t";
  for (int i = 0; i < n; ++i) table << ",mean." << i;
  for (int i = 0; i < n; ++i) table << ",var." << i;
  if (a.smooth) {
    for (int i = 0; i < n; ++i) table << ",smoothed_mean." << i;
    for (int i = 0; i < n; ++i) table << ",smoothed_var." << i;
  }
  table << ",loglik";
  for (const auto& name : data.channel_names) table << ",missing." << name;
  table << '\n';

  std::ostringstream s;
  s << std::setprecision(6);
  double total = 0.0;
  for (std::size_t i = 0; i < data.participants.size(); ++i) {
    const auto& p = data.participants[i];
    emass::FilterResult f;
    if (particle) {
      emass::ParticleOptions po;
      po.n_particles = a.particles;
      po.seed = emass::derive_seed(a.seed, i, 3);
      f = emass::particle_filter(spec, p, po);
    } else {
      f = emass::run_kalman(spec, p);
    }
    emass::SmoothResult sm;
    if (a.smooth) sm = emass::kalman_smooth(f);
    for (Eigen::Index k = 0; k < p.rows(); ++k) {
      const auto r = static_cast<std::size_t>(k);
      table << p.id << ',' << emass::format_number(p.t[r]);
      for (int j = 0; j < n; ++j) table << ',' << emass::format_number(f.filtered_mean[r](j));
      for (int j = 0; j < n; ++j) table << ',' << emass::format_number(f.filtered_cov[r](j, j));
      if (a.smooth) {
        for (int j = 0; j < n; ++j) table << ',' << emass::format_number(sm.smoothed_mean[r](j));
        for (int j = 0; j < n; ++j) table << ',' << emass::format_number(sm.smoothed_cov[r](j, j));
      }
      table << ',' << emass::format_number(f.loglik[r]);
      for (Eigen::Index c = 0; c < data.n_obs(); ++c) table << ',' << (p.missing(k, c) ? 1 : 0);
      table << '\n';
    }
    total += f.log_likelihood;
    s << p.id << ": loglik " << f.log_likelihood << " over " << p.rows() << " pings\n";
  }
  emass::write_file_atomic(a.out, table.str());

  Manifest manifest("filter");
  manifest.flag("model", a.model);
  manifest.flag("data", a.data);
  manifest.flag("likelihood", a.likelihood);
  manifest.flag("particles", a.particles);
  manifest.flag("smooth", a.smooth);
  manifest.flag("out", a.out);
  manifest.seed(a.seed);
  manifest.input(a.model);
  manifest.input(a.data);
  manifest.output(a.out);
  manifest.write(sibling(a.out, ".manifest.json"));

  s << "total loglik " << total << "\nwrote " << a.out << "\n";
  write_summary(sibling(a.out, ".summary.txt"), s.str());
}

// compare ---------------------------------------------------------------------

struct CompareArgs {
  std::string data, likelihood = "kalman", out;
  std::vector<std::string> templates;
  int restarts = 5;
  int particles = 1000;
  std::uint64_t seed = 0;
};

void run_compare(const CompareArgs& a) {
  const emass::EmaDataset data = emass::read_dataset(fs::path(a.data));
  std::vector<emass::ModelTemplate> templates;
  for (const auto& path : a.templates) templates.push_back(emass::load_template(path));
  emass::FitOptions options;
  options.n_restarts = a.restarts;
  options.likelihood = likelihood_kind(a.likelihood);
  options.n_particles = a.particles;
  options.seed = a.seed;
  const auto rows = emass::compare_models(templates, data, options);

  std::ostringstream table;
  emass::write_comparison_table(rows, table);
  emass::write_file_atomic(a.out, table.str());

  Manifest manifest("compare");
  manifest.flag("data", a.data);
  manifest.flag("templates", a.templates);
  manifest.flag("likelihood", a.likelihood);
  manifest.flag("restarts", a.restarts);
  manifest.flag("particles", a.particles);
  manifest.flag("out", a.out);
  manifest.seed(a.seed);
  manifest.input(a.data);
  for (const auto& path : a.templates) manifest.input(path);
  manifest.output(a.out);
  manifest.write(sibling(a.out, ".manifest.json"));

  std::ostringstream s;
  s << std::left << std::setw(20) << "model" << std::right << std::setw(4) << "k"
    << std::setw(14) << "loglik" << std::setw(14) << "aic" << std::setw(14) << "bic"
    << "  best\n";
  s << std::fixed << std::setprecision(3);
  for (const auto& r : rows) {
    std::string best;
    if (r.rank_aic == 1) best += " aic";
    if (r.rank_bic == 1) best += " bic";
    s << std::left << std::setw(20) << r.model_id << std::right << std::setw(4) << r.k
      << std::setw(14) << r.loglik << std::setw(14) << r.aic << std::setw(14) << r.bic << " "
      << best << (r.converged ? "" : " (not converged)") << "\n";
  }
  s << "wrote " << a.out << "\n";
  write_summary(sibling(a.out, ".summary.txt"), s.str());
}

// plotdata --------------------------------------------------------------------

struct PlotArgs {
  std::string figure, out;
  std::uint64_t seed = 0;
};

void run_plotdata(const PlotArgs& a) {
  const emass::PlotTable table = emass::make_figure(a.figure, a.seed);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw emass::Error(emass::ErrorCode::Io, "cannot create directory " + a.out);
  const std::string file = (fs::path(a.out) / (a.figure + ".csv")).string();
  std::ostringstream text;
  emass::write_plot_table(table, text);
  emass::write_file_atomic(file, text.str());

  Manifest manifest("plotdata");
  manifest.flag("figure", a.figure);
  manifest.flag("out", a.out);
  manifest.seed(a.seed);
  manifest.output(file);
  manifest.write(sibling(file, ".manifest.json"));

  std::ostringstream s;
  s << a.figure << ": " << table.rows.size() << " rows, columns";
  for (const auto& c : table.columns) s << ' ' << c;
  s << "\nwrote " << file << "\n";
  write_summary(sibling(file, ".summary.txt"), s.str());
}

// validate --------------------------------------------------------------------

struct ValidateArgs {
  std::vector<std::string> models, scenarios, templates, data;
};

/// Checks every file, prints a JSON report and fails with the first error.
void run_validate(const ValidateArgs& a) {
  Json report = Json::array();
  std::optional<emass::Error> first;
  const auto check = [&](const std::string& kind, const std::string& path, auto&& load) {
    Json entry{{"kind", kind}, {"path", path}};
    try {
      load(path);
      entry["ok"] = true;
    } catch (const emass::Error& e) {
      entry["ok"] = false;
      entry["code"] = std::string(emass::to_string(e.code()));
      entry["message"] = e.what();
      if (!first) first = e;
    }
    report.push_back(entry);
  };
  for (const auto& p : a.models) {
    check("model", p, [](const std::string& f) {
      emass::require_valid(emass::load_model(f));
    });
  }
  for (const auto& p : a.scenarios) {
    check("scenario", p, [](const std::string& f) {
      emass::scenario_from_json(emass::read_json_file(f));
    });
  }
  for (const auto& p : a.templates) {
    check("template", p, [](const std::string& f) { emass::load_template(f); });
  }
  for (const auto& p : a.data) {
    check("data", p, [](const std::string& f) { emass::read_dataset(fs::path(f)); });
  }
  std::cout << report.dump(2) << "\n";
  if (first) throw *first;
}

int exit_code(emass::ErrorCode code) {
  switch (emass::kind_of(code)) {
    case emass::ErrorKind::Validation: return 2;
    case emass::ErrorKind::Numerical: return 3;
    case emass::ErrorKind::Io: return 4;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"State-space simulation, filtering and estimation for EMA data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  const std::vector<std::string> likelihoods{"kalman", "particle"};

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset from a model and scenario");
  simulate->add_option("--model", sim.model, "Model file")->required();
  simulate->add_option("--scenario", sim.scenario, "Scenario file")->required();
  simulate->add_option("--out", sim.out, "Dataset file to write")->required();
  simulate->add_option("--seed", sim.seed, "Seed; overrides the scenario seed")->required();

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Maximum-likelihood fit of a template");
  fit->add_option("--data", fa.data, "Dataset file")->required();
  fit->add_option("--template", fa.templ, "Template file")->required();
  fit->add_option("--mode", fa.mode, "idiographic or pooled")
      ->check(CLI::IsMember({"idiographic", "pooled"}))
      ->capture_default_str();
  fit->add_option("--likelihood", fa.likelihood, "kalman or particle")
      ->check(CLI::IsMember(likelihoods))
      ->capture_default_str();
  fit->add_option("--restarts", fa.restarts, "Number of optimizer starts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit->add_option("--particles", fa.particles, "Particles per filter run")->capture_default_str();
  fit->add_option("--seed", fa.seed, "Seed for restarts and particle streams")->capture_default_str();
  fit->add_option("--out", fa.out, "Fit result file to write")->required();

  FilterArgs fl;
  auto* filter = app.add_subcommand("filter", "Per-ping filtered states and log-likelihood");
  filter->add_option("--model", fl.model, "Model file")->required();
  filter->add_option("--data", fl.data, "Dataset file")->required();
  filter->add_option("--likelihood", fl.likelihood, "kalman or particle")
      ->check(CLI::IsMember(likelihoods))
      ->capture_default_str();
  filter->add_flag("--smooth", fl.smooth, "Add smoothed means and variances");
  filter->add_option("--particles", fl.particles, "Particles per filter run")->capture_default_str();
  filter->add_option("--seed", fl.seed, "Seed for particle streams")->capture_default_str();
  filter->add_option("--out", fl.out, "Table to write")->required();

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "Fit and rank several templates by AIC and BIC");
  compare->add_option("--data", ca.data, "Dataset file")->required();
  compare->add_option("--templates", ca.templates, "Template files")->required();
  compare->add_option("--likelihood", ca.likelihood, "kalman or particle")
      ->check(CLI::IsMember(likelihoods))
      ->capture_default_str();
  compare->add_option("--restarts", ca.restarts, "Number of optimizer starts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compare->add_option("--particles", ca.particles, "Particles per filter run")->capture_default_str();
  compare->add_option("--seed", ca.seed, "Seed for restarts and particle streams")->capture_default_str();
  compare->add_option("--out", ca.out, "Comparison table to write")->required();

  PlotArgs pa;
  auto* plotdata = app.add_subcommand("plotdata", "Write the series behind a figure");
  plotdata->add_option("--figure", pa.figure, "fig1a, fig1b, fig3a, fig3b or fig3c")->required();
  plotdata->add_option("--out", pa.out, "Output directory")->required();
  plotdata->add_option("--seed", pa.seed, "Seed")->required();

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check model, scenario, template and data files");
  validate->add_option("--model", va.models, "Model files");
  validate->add_option("--scenario", va.scenarios, "Scenario files");
  validate->add_option("--template", va.templates, "Template files");
  validate->add_option("--data", va.data, "Dataset files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) run_simulate(sim);
    if (*fit) run_fit(fa);
    if (*filter) run_filter(fl);
    if (*compare) run_compare(ca);
    if (*plotdata) run_plotdata(pa);
    if (*validate) run_validate(va);
  } catch (const emass::Error& e) {
    std::cerr << "error " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
