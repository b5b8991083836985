#include <benchmark/benchmark.h>

#include "hybridvit/augment/pipeline.hpp"
#include "hybridvit/backbone/resnet.hpp"
#include "hybridvit/byol/byol.hpp"
#include "hybridvit/data/dataset.hpp"
#include "hybridvit/transformers/attention.hpp"
#include "hybridvit/transformers/classifier.hpp"

using namespace hybridvit;

namespace {

const data::Dataset& images() {
  static const auto ds = data::make_synthetic_dataset(16, 5, 96, 1, data::Split::unlabeled);
  return ds;
}

void BM_AugmentDataAug5(benchmark::State& state) {
  const auto spec = augment::build_pipeline("data_aug_5");
  RngStream rng(1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(augment::apply(spec, images().images[i++ % 16], rng));
  }
}
BENCHMARK(BM_AugmentDataAug5)->Unit(benchmark::kMicrosecond);

void BM_BackboneToTap(benchmark::State& state) {
  torch::set_num_threads(1);
  torch::NoGradGuard ng;
  backbone::Backbone net(backbone::BackboneConfig{}, 1);
  net->eval();
  const auto tap = static_cast<backbone::TapPoint>(state.range(0));
  auto x = torch::rand({16, 3, 96, 96});
  for (auto _ : state) benchmark::DoNotOptimize(net->forward_to(x, tap));
}
BENCHMARK(BM_BackboneToTap)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Attention(benchmark::State& state) {
  torch::set_num_threads(1);
  torch::NoGradGuard ng;
  transformers::MultiHeadAttention mha(128, 4);
  auto x = torch::randn({16, state.range(0), 128});
  for (auto _ : state) benchmark::DoNotOptimize(mha->forward(x));
}
BENCHMARK(BM_Attention)->Arg(16)->Arg(144)->Arg(576)->Unit(benchmark::kMillisecond);

void BM_HybridHeadForward(benchmark::State& state) {
  torch::set_num_threads(1);
  torch::NoGradGuard ng;
  transformers::TransformerConfig c;
  c.in_channels = 64;
  c.in_height = c.in_width = 12;
  c.patch = 1;
  transformers::TransformerClassifier m(c, 1);
  m->eval();
  auto x = torch::randn({16, 64, 12, 12});
  for (auto _ : state) benchmark::DoNotOptimize(m->forward(x));
}
BENCHMARK(BM_HybridHeadForward)->Unit(benchmark::kMillisecond);

void BM_ByolStep(benchmark::State& state) {
  torch::set_num_threads(1);
  byol::ByolState s(byol::ByolConfig{}, 1);
  const auto spec = augment::build_pipeline("data_aug_5");
  RngStream rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(byol::byol_step(s, images().images, spec, rng, 0.99));
  }
}
BENCHMARK(BM_ByolStep)->Unit(benchmark::kMillisecond)->Iterations(5);

}  // namespace

BENCHMARK_MAIN();
