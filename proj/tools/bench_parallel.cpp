// Serial reference kernels vs OpenMP kernels on the fixture network (DESK keys).
#include "fdsnn/dataset.hpp"
#include "fdsnn/network.hpp"
#include "fdsnn/oracle.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <memory>

using namespace fdsnn;

namespace {

struct Setup {
  CsnnModel model;
  DiscretizedNetwork net;
  std::unique_ptr<SecretKeySet> sk;
  std::unique_ptr<BootstrapKey> bk;
  CiphertextTensor image;
  CiphertextTensor conv_out;

  Setup() {
    model = load_model(FDSNN_SOURCE_DIR "/fixtures/csnn_if_t2.json");
    net = discretize(model, 40);
    Rng rng(1);
    sk = std::make_unique<SecretKeySet>(gen_secret_keys(preset("DESK"), rng));
    bk = std::make_unique<BootstrapKey>(gen_bootstrap_key(*sk, rng));
    const Dataset d = load_dataset(FDSNN_SOURCE_DIR "/data/mnist-desk", "test", 1);
    image = encrypt_image(d.images[0], net.input_shape, net.L, *sk, rng);
    conv_out = layer_forward(image, net.layers[0], sk->params.modulus());
  }
};

Setup& setup() {
  static Setup s;
  return s;
}

ExecOptions options(const benchmark::State& state) {
  const int workers = static_cast<int>(state.range(0));
  return {workers == 0 ? ExecMode::Serial : ExecMode::Parallel, workers == 0 ? 1 : workers, {}};
}

void BM_ConvLayer(benchmark::State& state) {
  Setup& s = setup();
  const ExecOptions opt = options(state);
  for (auto _ : state) benchmark::DoNotOptimize(layer_forward(s.image, s.net.layers[0], s.sk->params.modulus(), opt));
  state.SetItemsProcessed(state.iterations() * std::int64_t(s.conv_out.cells.size()));
}

void BM_SpikingLayer(benchmark::State& state) {
  Setup& s = setup();
  const ExecOptions opt = options(state);
  const NeuronPrograms prog = NeuronPrograms::build(s.net.lif, s.sk->params.p);
  CiphertextTensor x = s.conv_out;
  x.cells.resize(128);
  x.shape = {128, 1, 1};
  std::vector<CipherLifState> states(x.cells.size(), CipherLifState{lwe_trivial(0, s.sk->params.n, s.sk->params)});
  for (auto _ : state) benchmark::DoNotOptimize(spiking_forward(x, states, s.net.lif, *s.bk, prog, opt));
  state.SetItemsProcessed(state.iterations() * std::int64_t(x.cells.size()));
}

void BM_Infer(benchmark::State& state) {
  Setup& s = setup();
  const ExecOptions opt = options(state);
  for (auto _ : state) benchmark::DoNotOptimize(infer(s.image, s.net, *s.bk, 1, opt));
}

// Argument 0 selects the serial reference; k > 0 the OpenMP kernels with k threads.
void worker_args(benchmark::internal::Benchmark* b) {
  b->Arg(0);
  for (int w = 1; w <= std::max(1, omp_get_num_procs()); w *= 2) b->Arg(w);
  b->Unit(benchmark::kMillisecond)->UseRealTime();
}

}  // namespace

BENCHMARK(BM_ConvLayer)->Apply(worker_args);
BENCHMARK(BM_SpikingLayer)->Apply(worker_args);
BENCHMARK(BM_Infer)->Apply(worker_args)->Iterations(1);

BENCHMARK_MAIN();
