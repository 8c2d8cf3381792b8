#include <benchmark/benchmark.h>

#include <vector>

#include "fcp/env.hpp"
#include "fcp/oracle.hpp"
#include "fcp/policy.hpp"
#include "fcp/train.hpp"

namespace {

const fcp::Environment& env() {
  static const fcp::Environment e(fcp::FeedbackGrammar::builtin(), fcp::EnvOptions{0.05});
  return e;
}

fcp::TaskInstance arithmetic_task() {
  return env().tasks().parse_instruction(make_sequence(env().vocab(), fcp::Role::kInstruction, "7 * 9 mod 10 = ?"));
}

fcp::PolicyParameters tabular_reference(const fcp::TaskInstance& x) {
  auto params = fcp::make_tabular_policy(env().vocab());
  fcp::register_tasks(params, env(), std::vector<fcp::TaskInstance>{x});
  return params;
}

void BM_EnumerateJoint(benchmark::State& state) {
  const auto x = arithmetic_task();
  const auto ref = tabular_reference(x);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcp::enumerate_joint(ref, env(), x, fcp::FeedbackStyle::kReviewer));
  }
}
BENCHMARK(BM_EnumerateJoint);

void BM_Posterior(benchmark::State& state) {
  const auto x = arithmetic_task();
  const auto joint = fcp::enumerate_joint(tabular_reference(x), env(), x, fcp::FeedbackStyle::kReviewer);
  const auto support = fcp::marginal_support(joint);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcp::posterior(joint, support[i++ % support.size()]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Posterior);

void BM_TabularSample(benchmark::State& state) {
  const auto x = arithmetic_task();
  const auto ref = tabular_reference(x);
  fcp::Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcp::sample(ref, x.instruction, rng, {}));
  }
}
BENCHMARK(BM_TabularSample);

void BM_NeuralGradients(benchmark::State& state) {
  fcp::NeuralShape shape;
  shape.vocab = env().vocab().size();
  fcp::Rng rng(2);
  auto params = fcp::make_neural_policy(shape, env().vocab().hash(), rng);
  const auto x = arithmetic_task();
  std::vector<fcp::Example> batch;
  for (int i = 0; i < state.range(0); ++i) {
    batch.push_back({x.instruction, make_sequence(env().vocab(), fcp::Role::kResponse, "``` let me check step by step => 3 <eos>"), 1.0});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcp::nll_gradients(params, batch, fcp::AggregationMode::kTokenMean));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NeuralGradients)->Arg(1)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
