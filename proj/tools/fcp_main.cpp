#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fcp/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Feedback-conditional policy laboratory"};
  app.require_subcommand(1);
  fcp::RunOptions opts;
  const std::map<std::string, std::string> about = {
      {"gen-tasks", "sample train and eval prompts"},
      {"collect", "build the reference policy and collect (x, o, c) triples"},
      {"train-offline", "fit the feedback-conditional policy on collected triples"},
      {"build-pool", "select positive feedback conditions for bootstrapping"},
      {"bootstrap", "run online rounds conditioned on pool feedback"},
      {"train-baseline", "train an sft, rft, cft or grpo comparison policy"},
      {"eval", "decode trained policies under each condition label"},
      {"verify", "check posterior identities on random or enumerated joints"},
      {"report", "summarize bootstrap dynamics and evaluation results"},
  };

  for (const auto& name : fcp::subcommands()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("-c,--config", opts.config_path, "JSON experiment config");
    sub->add_option("overrides", opts.overrides, "dotted key=value overrides");
    if (name == "verify" || name == "report") sub->add_flag("--json", opts.json, "machine-readable output");
    if (name == "train-baseline") {
      sub->add_option("-m,--method", opts.method, "sft, rft, cft or grpo")->check(CLI::IsMember({"sft", "rft", "cft", "grpo"}));
    }
    if (name == "bootstrap") sub->add_option("--resume-round", opts.resume_round, "restart after this round's checkpoint");
    if (name == "verify") {
      sub->add_option("--responses", opts.verify.responses, "responses per random instance");
      sub->add_option("--feedbacks", opts.verify.feedbacks, "feedbacks per random instance");
      sub->add_option("--instances", opts.verify.instances, "number of instances");
      sub->add_option("--seed", opts.verify.seed, "instance seed");
      sub->add_flag("--env", opts.verify.use_env, "enumerate a task from the environment instead");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : fcp::kExitConfig;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  return fcp::run(sub, opts, std::cout, std::cerr);
}
