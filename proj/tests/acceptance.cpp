// Acceptance harness: one PASS/FAIL line per criterion.
//
//   acceptance [criterion ...] [--out DIR]
//
// With no criterion numbers all eleven are run. Exit status is 1 if any selected criterion fails.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "scenarios.hpp"

namespace {

struct Criterion {
  int id;
  const char* title;
  const char* scenario;
  std::vector<std::string> overrides;
  double max_seconds;  // 0 means no runtime bound
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "slice Plancherel, R=128, n=2, 10 densities, rel err 1e-3, under 30 s", "plancherel-slices",
       {"R=128", "n=2", "density.count=10"}, 30.0},
      {2, "fast field equals direct quadrature at R=16 within 1e-9", "fast-direct", {"R=16"}, 0.0},
      {3, "wave packets at R=256, delta=0.05: reconstruction, orthogonality, decay", "wavepackets",
       {"R=256", "delta=0.05"}, 0.0},
      {4, "tomography oracles: chords, tube_mass, a_functional", "tomography-oracles", {}, 0.0},
      {5, "focusing pair ratio in [0.05,1] with |slope| <= 0.1 over R=64..256", "focusing-sweep",
       {"R_list=[64,128,256]"}, 0.0},
      {6, "richness counting identity exact at R=256", "richness", {"R=256"}, 0.0},
      {7, "refined decoupling max ratio stable within x1.5 over 5 seeds at R=256", "refined-decoupling",
       {"R=256", "seeds=[1,2,3,4,5]"}, 0.0},
      {8, "slab decoupling ratio <= 10 at rho=64, R=256, 5 seeds", "slab-decoupling",
       {"R=256", "rho=64", "seeds=[1,2,3,4,5]"}, 0.0},
      {9, "counterexample ratio increasing per seed with slope >= 0.20, R=64..1024", "cex-growth",
       {"n=2", "R_list=[64,128,256,512,1024]", "seeds=[1,2,3]"}, 0.0},
      {10, "greedy selection count at R=64,128 and three-ball brute force", "cex-greedy",
       {"R_list=[64,128]", "seeds=[1,2,3]"}, 0.0},
      {11, "DA1 <= 20 and DA2 in [1/4,4] on the full construction at R=128", "cex-axioms", {"R=128"}, 0.0},
  };
  return list;
}

bool run_one(const Criterion& c, const std::string& out_root) {
  const auto* s = mtcli::find_scenario(c.scenario);
  std::string detail;
  bool ok = false;
  if (!s) {
    detail = "scenario missing";
  } else {
    try {
      const std::string out = out_root + "/" + c.scenario;
      std::filesystem::create_directories(out);
      auto res = mtcli::run_scenario(*s, "", c.overrides, out);
      ok = res.ok();
      for (const auto& chk : res.checks)
        std::printf("    %s %s [%s]\n", chk.passed ? "ok  " : "FAIL", chk.name.c_str(), chk.detail.c_str());
      if (c.max_seconds > 0 && res.seconds > c.max_seconds) ok = false;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f s", res.seconds);
      detail = buf;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
  }
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", c.id, c.title, detail.c_str());
  std::fflush(stdout);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::string out = "acceptance_out";
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--out" && i + 1 < argc) {
      out = argv[++i];
    } else {
      try {
        wanted.push_back(std::stoi(a));
      } catch (const std::exception&) {
        std::fprintf(stderr, "usage: acceptance [criterion ...] [--out DIR]\n");
        return 2;
      }
    }
  }
  int failed = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    ++ran;
    if (!run_one(c, out)) ++failed;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no such criterion\n");
    return 2;
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed ? 1 : 0;
}
