// Command-line driver: train, compare, cost-sweep, verify.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "fadl/commands.hpp"
#include "fadl/errors.hpp"

namespace {

// Flags shared by train and compare. Enum-valued flags are read as text and
// converted after parsing.
struct ExperimentFlags {
  std::string data, loss = "logistic", method = "fadl", family = "quadratic", combine = "uniform";
  std::string inner = "tron", warm = "zero", partition = "shuffled", backend = "sequential";
  std::size_t dim = 0;
  bool synth = false;
  fadl::SynthSpec synth_spec;
  fadl::Experiment ex;
  double f_star = 0.0, target_gap = 0.0;

  void add(CLI::App& app) {
    auto& r = ex.run;
    auto* data_opt = app.add_option("--data", data, "LIBSVM dataset path")->check(CLI::ExistingFile);
    auto* synth_opt = app.add_flag("--synth", synth, "use the synthetic generator instead of --data");
    data_opt->excludes(synth_opt);
    app.add_option("--dim", dim, "feature dimension override for LIBSVM input");
    app.add_option("--synth-n", synth_spec.n, "synthetic examples")->capture_default_str();
    app.add_option("--synth-m", synth_spec.m, "synthetic features")->capture_default_str();
    app.add_option("--synth-density", synth_spec.density, "synthetic feature density in (0,1]")->capture_default_str();
    app.add_option("--synth-separability", synth_spec.separability, "1 - label flip probability")->capture_default_str();
    app.add_option("--synth-seed", synth_spec.seed, "synthetic data seed")->capture_default_str();
    app.add_option("--loss", loss, "least-squares | logistic | squared-hinge")->capture_default_str();
    app.add_option("--lambda", ex.lambda, "L2 regularization")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--method", method, "fadl | sqm")->capture_default_str();
    app.add_option("--family", family, "linear | hybrid | quadratic | nonlinear")->capture_default_str();
    app.add_option("-P,--nodes", r.nodes, "node count")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--eps-g", r.eps_g, "stop when ||g|| <= eps_g ||g0||")->capture_default_str();
    app.add_option("--max-outer", r.max_outer, "outer iteration cap")->check(CLI::NonNegativeNumber)->capture_default_str();
    app.add_option("--combine", combine, "uniform | proportional")->capture_default_str();
    app.add_option("--seed", r.seed, "partition and inner-optimizer seed")->capture_default_str();
    app.add_option("--inner", inner, "tron | lbfgs | svrg")->capture_default_str();
    app.add_option("--khat", r.inner.khat, "inner iterations per outer iteration")->capture_default_str();
    app.add_option("--cg-tol", r.inner.cg_tol, "inner TRON relative CG tolerance")->capture_default_str();
    app.add_option("--cg-max", r.inner.cg_max, "inner TRON CG cap")->capture_default_str();
    app.add_option("--lbfgs-memory", r.inner.lbfgs_memory, "inner L-BFGS history")->capture_default_str();
    app.add_option("--svrg-step", r.inner.svrg_step, "inner SVRG step (0 = automatic)")->capture_default_str();
    app.add_option("--warm-start", warm, "zero | sgd-average")->capture_default_str();
    app.add_option("--warm-epochs", r.warm_epochs, "SGD epochs for the warm start")->capture_default_str();
    app.add_option("--alpha", r.linesearch.alpha, "Armijo constant")->capture_default_str();
    app.add_option("--beta", r.linesearch.beta, "Wolfe constant")->capture_default_str();
    app.add_option("--sqm-cg-tol", r.sqm_cg_tol, "SQM relative CG tolerance")->capture_default_str();
    app.add_option("--sqm-cg-max", r.sqm_cg_max, "SQM CG cap")->capture_default_str();
    app.add_option("--gamma", r.gamma, "communication/computation cost ratio")->capture_default_str();
    app.add_option("--f-star", f_star, "known optimal value, enables the relative gap");
    app.add_flag("--reference", ex.reference, "compute f* with a long reference solve first");
    app.add_option("--target-gap", target_gap, "also stop once the relative gap reaches this");
    app.add_option("--partition", partition, "round-robin | shuffled")->capture_default_str();
    app.add_option("--backend", backend, "sequential | threaded")->capture_default_str();
    app.add_option("--threads", ex.threads, "workers for the threaded backend (default: $FADL_THREADS or cores)");
  }

  fadl::Experiment build(const CLI::App& app) {
    if (!data.empty()) ex.data.path = data;
    if (synth) ex.data.synth = synth_spec;
    if (app.count("--dim")) ex.data.dimension = dim;
    ex.loss = fadl::parse_loss(loss);
    ex.run.method = fadl::parse_method(method);
    ex.run.family = fadl::parse_family(family);
    ex.run.combine = fadl::parse_combine_weights(combine);
    ex.run.inner.method = fadl::parse_inner_method(inner);
    ex.run.warm_start = fadl::parse_warm_start(warm);
    ex.scheme = fadl::parse_partition_scheme(partition);
    ex.backend = fadl::parse_backend(backend);
    if (app.count("--f-star")) ex.run.f_star = f_star;
    if (app.count("--target-gap")) ex.run.target_gap = target_gap;
    ex.data.validate();
    ex.run.validate();
    return ex;
  }
};

std::vector<double> parse_list(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& s : items) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != s.size() || !(v > 0.0)) throw fadl::InputError("expected a positive number, got '" + s + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FADL distributed training and cost-model toolkit"};
  app.set_config("--config", "", "TOML/INI config file; flags override its values");
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "run one method and write per-iteration metrics");
  ExperimentFlags train_flags;
  train_flags.add(*train);
  std::string train_out, train_table;
  train->add_option("-o,--output", train_out, "metrics JSONL path (default stdout)");
  train->add_option("--table", train_table, "also write a tab-separated table here");

  auto* compare = app.add_subcommand("compare", "run several methods under the same settings");
  ExperimentFlags compare_flags;
  compare_flags.add(*compare);
  std::vector<std::string> methods = {"fadl:quadratic", "sqm"};
  std::string compare_out;
  compare->add_option("--methods", methods, "list of fadl:<family> or sqm")->delimiter(',')->capture_default_str();
  compare->add_option("-o,--output", compare_out, "metrics JSONL path for all runs");

  auto* sweep = app.add_subcommand("cost-sweep", "tabulate the cost model over parameter grids");
  std::vector<std::string> gammas = {"100", "1000"}, nodes = {"8"}, khats = {"10"}, dims;
  bool known = false;
  double outer_ratio = 4.0;
  sweep->add_option("--gamma", gammas, "gamma values")->delimiter(',')->capture_default_str();
  sweep->add_option("--nodes", nodes, "node counts")->delimiter(',')->capture_default_str();
  sweep->add_option("--khat", khats, "inner iteration budgets")->delimiter(',')->capture_default_str();
  sweep->add_option("--dims", dims, "name=nz:m entries")->delimiter(',');
  sweep->add_flag("--known-datasets", known, "add kdd2010, url, webspam, mnist8m and rcv sizes");
  sweep->add_option("--outer-ratio", outer_ratio, "T_outer(SQM) / T_outer(FADL)")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "run the theory checks against dense oracles");
  std::string property;
  fadl::VerifyOptions vopt;
  verify->add_option("--property", property, "run only this property");
  verify->add_option("--tolerance", vopt.tolerance_scale, "multiplier on every built-in tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify->add_option("--seed", vopt.seed, "instance seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << e.what() << "\n";
    return fadl::kExitUsage;
  }

  try {
    if (*train) {
      fadl::TrainOptions o;
      o.experiment = train_flags.build(*train);
      if (!train_out.empty()) o.metrics_path = train_out;
      if (!train_table.empty()) o.table_path = train_table;
      return fadl::cmd_train(o, std::cout, std::cerr);
    }
    if (*compare) {
      fadl::CompareOptions o;
      o.experiment = compare_flags.build(*compare);
      o.methods = methods;
      if (!compare_out.empty()) o.metrics_path = compare_out;
      return fadl::cmd_compare(o, std::cout, std::cerr);
    }
    if (*sweep) {
      fadl::CostSweepOptions o;
      o.gamma = parse_list(gammas);
      o.nodes = parse_list(nodes);
      o.khat = parse_list(khats);
      for (const auto& d : dims) o.dims.push_back(fadl::parse_dims(d));
      if (known)
        for (const auto& d : fadl::known_dataset_dims()) o.dims.push_back(d);
      o.outer_ratio = outer_ratio;
      return fadl::cmd_cost_sweep(o, std::cout, std::cerr);
    }
    if (!property.empty()) vopt.property = property;
    vopt.validate();
    return fadl::cmd_verify(vopt, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return fadl::kExitUsage;
  }
}
