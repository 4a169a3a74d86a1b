#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "lsbo/bo.hpp"
#include "lsbo/external_sim.hpp"
#include "lsbo/io.hpp"
#include "lsbo/simulators.hpp"
#include "lsbo/vae.hpp"

namespace {

using json = nlohmann::json;

// Exit codes: 0 success, 1 usage, 2 runtime error, 3 simulator failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitSimFailure = 3;

// The one machine-readable stdout line; everything else goes to stderr.
void emit(const json& j) { std::printf("%s\n", j.dump().c_str()); }

struct VaeFlags {
  std::size_t latent_dim = 8;
  double beta = 0.05;
  std::size_t epochs = 2000;
  std::size_t batch = 64;
  double lr = 1e-3;

  void attach(CLI::App* app) {
    app->add_option("--latent-dim", latent_dim, "Latent dimensionality");
    app->add_option("--beta", beta, "KL weight");
    app->add_option("--vae-epochs", epochs, "Training epochs");
    app->add_option("--vae-batch", batch, "Minibatch size");
    app->add_option("--vae-lr", lr, "Learning rate");
  }
  lsbo::VaeConfig to_config(std::uint64_t seed) const {
    lsbo::VaeConfig cfg;
    cfg.latent_dim = latent_dim;
    cfg.beta = beta;
    cfg.epochs = epochs;
    cfg.batch = batch;
    cfg.lr = lr;
    cfg.seed = seed;
    return cfg;
  }
};

struct SimFlags {
  std::string command;  // empty: built-in reactor
  std::uint64_t timeout_ms = 30000;

  void attach(CLI::App* app) {
    app->add_option("--command", command,
                    "External simulator command (JSON line protocol); "
                    "defaults to the built-in reactor");
    app->add_option("--timeout-ms", timeout_ms, "External simulator timeout");
  }
  lsbo::Simulator make(int arity) const {
    if (command.empty()) return lsbo::make_reactor_simulator(arity);
    return lsbo::make_external_simulator({command, timeout_ms});
  }
};

lsbo::DesignSpace load_space(const std::string& path) {
  if (path.empty()) return lsbo::toy_reactor_space();
  return lsbo::DesignSpace::load_file(path);
}

json point_json(const lsbo::DesignSpace& space, const lsbo::DesignPoint& p) {
  json out = json::object();
  for (std::size_t n = 0; n < space.num_vars(); ++n) {
    const lsbo::LevelValue& v = space.value(p, n);
    if (v.is_number())
      out[space.var(n).name] = v.number();
    else
      out[space.var(n).name] = v.label();
  }
  return out;
}

json campaign_summary(const char* command, const std::string& dir,
                      const lsbo::VaeModel& vae, const lsbo::CampaignState& st) {
  json j;
  j["command"] = command;
  j["dir"] = dir;
  j["arity"] = st.cfg.arity;
  j["evaluations"] = st.records.size();
  j["iterations"] = st.iterations_done();
  j["failures"] = st.failures.size();
  j["aborted"] = st.aborted;
  if (st.aborted) j["abort_reason"] = st.abort_reason;
  if (!st.records.empty()) {
    if (st.cfg.arity == 1) {
      std::size_t b = st.best_index();
      j["best_f1"] = st.records[b].f[0];
      j["best_point"] = point_json(vae.space, st.records[b].x);
    } else {
      j["front_size"] = st.front_indices().size();
    }
  }
  return j;
}

int cmd_train_vae(const std::string& space_path, const std::string& out_dir,
                  const VaeFlags& vf, std::uint64_t seed) {
  lsbo::DesignSpace space = load_space(space_path);
  auto [model, report] = lsbo::train_vae_on_space(space, vf.to_config(seed));
  std::filesystem::create_directories(out_dir);
  std::string model_path = out_dir + "/model.bin";
  std::string curve_path = out_dir + "/training.csv";
  lsbo::save_vae(model, model_path);
  lsbo::write_file(curve_path, lsbo::training_csv(report));
  json j;
  j["command"] = "train-vae";
  j["model"] = model_path;
  j["training_curve"] = curve_path;
  j["epochs"] = report.epochs.size();
  if (!report.epochs.empty()) {
    j["loss_rec"] = report.epochs.back().loss_rec;
    j["loss_kl"] = report.epochs.back().loss_kl;
    j["loss_total"] = report.epochs.back().loss_total;
  }
  j["reconstruction_rate"] = report.reconstruction_rate;
  emit(j);
  return kExitOk;
}

int cmd_sweep(const std::string& space_path, const std::string& out_path,
              std::vector<std::size_t> dims, const VaeFlags& vf,
              std::uint64_t seed) {
  lsbo::DesignSpace space = load_space(space_path);
  auto rows = lsbo::latent_dim_sweep(space, dims, vf.to_config(seed));
  lsbo::write_file(out_path, lsbo::sweep_csv(rows));
  json jrows = json::array();
  for (const lsbo::SweepRow& r : rows) {
    jrows.push_back({{"latent_dim", r.latent_dim},
                     {"loss_total", r.loss_total},
                     {"reconstruction_rate", r.reconstruction_rate}});
  }
  emit(json{{"command", "sweep"}, {"out", out_path}, {"rows", jrows}});
  return kExitOk;
}

int cmd_optimize(const std::string& space_path, const std::string& out_dir,
                 int arity, std::size_t init, std::size_t budget,
                 std::size_t candidates, std::uint64_t seed,
                 const VaeFlags& vf, const SimFlags& sf) {
  lsbo::DesignSpace space = load_space(space_path);
  lsbo::CampaignConfig cfg;
  cfg.arity = arity;
  cfg.init_count = init;
  cfg.budget = budget;
  cfg.candidates = candidates;
  cfg.seed = seed;
  cfg.vae = vf.to_config(0);
  lsbo::Simulator sim = sf.make(arity);

  // The model pointer is filled by the model hook so per-eval writes can
  // serialize the full campaign directory.
  const lsbo::VaeModel* model = nullptr;
  auto cb = [&](const lsbo::CampaignState& st) {
    lsbo::write_campaign_dir(out_dir, *model, st);
    if (st.iterations_done() == 0)
      std::fprintf(stderr, "[init %zu/%zu]\n", st.init_done(), st.cfg.init_count);
    else
      std::fprintf(stderr, "[iter %zu/%zu]\n", st.iterations_done(), st.cfg.budget);
  };
  auto on_model = [&](const lsbo::VaeModel& vae) {
    model = &vae;
    std::fprintf(stderr, "[representation trained]\n");
  };
  std::fprintf(stderr, "[training representation]\n");
  lsbo::Campaign campaign = lsbo::run_campaign(space, sim, cfg, cb, on_model);
  lsbo::write_campaign_dir(out_dir, campaign.vae, campaign.state);
  emit(campaign_summary("optimize", out_dir, campaign.vae, campaign.state));
  return campaign.state.aborted ? kExitSimFailure : kExitOk;
}

int cmd_resume(const std::string& dir, std::size_t extra, const SimFlags& sf) {
  lsbo::LoadedCampaign lc = lsbo::load_campaign_dir(dir);
  lsbo::Simulator sim = sf.make(lc.state.cfg.arity);
  auto cb = [&](const lsbo::CampaignState& st) {
    lsbo::write_campaign_dir(dir, lc.vae, st);
    std::fprintf(stderr, "[iter %zu/%zu]\n", st.iterations_done(), st.cfg.budget);
  };
  lsbo::continue_campaign(lc.vae, lc.state, sim, extra, cb);
  lsbo::write_campaign_dir(dir, lc.vae, lc.state);
  emit(campaign_summary("resume", dir, lc.vae, lc.state));
  return lc.state.aborted ? kExitSimFailure : kExitOk;
}

int cmd_export_latent(const std::string& model_path, const std::string& out) {
  lsbo::VaeModel model = lsbo::load_vae(model_path);
  std::string csv = lsbo::latent_csv(model);
  lsbo::write_file(out, csv);
  std::size_t rows = std::size_t(model.space.cardinality());
  emit(json{{"command", "export-latent"}, {"out", out}, {"rows", rows}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space optimization over discrete design spaces"};
  app.require_subcommand(1);

  std::string space_path, out_dir, sweep_out, latent_out, model_path, resume_dir;
  std::uint64_t seed = 0;
  std::vector<std::size_t> dims{1, 2, 4, 8};
  int arity = 1;
  std::size_t init = 10, budget = 50, candidates = 2048, extra = 10;
  VaeFlags vf_train, vf_sweep, vf_opt;
  SimFlags sf_opt, sf_resume;

  // LSBO_OUT makes --out optional: directory outputs land there, file
  // outputs get a subcommand-named file inside it.
  const char* env_out = std::getenv("LSBO_OUT");
  auto dir_out = [&](CLI::App* sub, std::string& target, const char* help) {
    CLI::Option* o = sub->add_option("--out", target, help);
    if (env_out)
      target = env_out;
    else
      o->required();
  };
  auto file_out = [&](CLI::App* sub, std::string& target, const char* help,
                      const char* base) {
    CLI::Option* o = sub->add_option("--out", target, help);
    if (env_out)
      target = std::string(env_out) + "/" + base;
    else
      o->required();
  };

  CLI::App* train = app.add_subcommand("train-vae", "Train and checkpoint a representation");
  train->add_option("--space", space_path, "Design space config (default: built-in reactor space)");
  dir_out(train, out_dir, "Output directory (default: $LSBO_OUT)");
  train->add_option("--seed", seed, "Training seed");
  vf_train.attach(train);

  CLI::App* sweep = app.add_subcommand("sweep", "Compare latent dimensionalities");
  sweep->add_option("--space", space_path, "Design space config");
  file_out(sweep, sweep_out, "Output CSV path (default: $LSBO_OUT/sweep.csv)", "sweep.csv");
  sweep->add_option("--dims", dims, "Latent sizes to sweep")->delimiter(',');
  sweep->add_option("--seed", seed, "Training seed");
  vf_sweep.attach(sweep);

  CLI::App* opt = app.add_subcommand("optimize", "Run an optimization campaign");
  opt->add_option("--space", space_path, "Design space config");
  dir_out(opt, out_dir, "Campaign directory (default: $LSBO_OUT)");
  opt->add_option("--objectives", arity, "Objective count (1 or 2)");
  opt->add_option("--init", init, "Initial random evaluations");
  opt->add_option("--budget", budget, "Optimization evaluations");
  opt->add_option("--candidates", candidates, "Latent candidates per iteration");
  opt->add_option("--seed", seed, "Campaign seed");
  vf_opt.attach(opt);
  sf_opt.attach(opt);

  CLI::App* res = app.add_subcommand("resume", "Extend a saved campaign");
  res->add_option("--dir", resume_dir, "Campaign directory")->required();
  res->add_option("--budget", extra, "Additional optimization evaluations")->required();
  sf_resume.attach(res);

  CLI::App* exp = app.add_subcommand("export-latent", "Write the whole-space latent table");
  exp->add_option("--model", model_path, "Model checkpoint")->required();
  file_out(exp, latent_out, "Output CSV path (default: $LSBO_OUT/latent.csv)", "latent.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed())
      return cmd_train_vae(space_path, out_dir, vf_train, seed);
    if (sweep->parsed())
      return cmd_sweep(space_path, sweep_out, dims, vf_sweep, seed);
    if (opt->parsed())
      return cmd_optimize(space_path, out_dir, arity, init, budget, candidates,
                          seed, vf_opt, sf_opt);
    if (res->parsed()) return cmd_resume(resume_dir, extra, sf_resume);
    if (exp->parsed()) return cmd_export_latent(model_path, latent_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
