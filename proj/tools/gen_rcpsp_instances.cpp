// Writes generated 30-job instances as PSPLIB files plus an optimum sidecar
// certified by the exact branch and bound in tests/oracles.
//
//   gen_rcpsp_instances OUTDIR SEED...

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "apsosvm/rcpsp.hpp"
#include "oracles/rcpsp_bnb.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s OUTDIR SEED...\n", argv[0]);
    return 2;
  }
  const std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);
  apsosvm::GeneratorParams params;
  params.resource_strength = 0.3;
  params.resource_factor = 0.5;

  std::ofstream sidecar(dir / "optima.txt");
  sidecar << "# instance makespan (proven optimal by exhaustive branch and bound)\n";
  for (int i = 2; i < argc; ++i) {
    const auto seed = std::strtoull(argv[i], nullptr, 10);
    char name[32];
    std::snprintf(name, sizeof name, "gen30_%02llu", seed);
    const auto inst = apsosvm::generate_instance(params, seed, name);
    const auto exact = oracle::solve_exact(inst, 50'000'000);
    if (!exact.proven) {
      std::fprintf(stderr, "%s: search limit reached, skipped\n", name);
      continue;
    }
    std::ofstream out(dir / (std::string(name) + ".sm"));
    apsosvm::write_psplib(out, inst);
    sidecar << name << " " << exact.makespan << "\n";
    std::printf("%s critical_path=%d optimum=%d nodes=%llu\n", name, inst.critical_path_bound(),
                exact.makespan, static_cast<unsigned long long>(exact.nodes));
  }
  return 0;
}
