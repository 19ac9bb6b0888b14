#include "testsupport.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>
#include <sys/wait.h>
#include <unistd.h>

#include "compilot/evalkit.hpp"

namespace compilot::testing {

std::filesystem::path corpus_dir() { return COMPILOT_TEST_CORPUS; }
std::filesystem::path data_dir() { return COMPILOT_TEST_DATA; }
std::filesystem::path cli_path() { return COMPILOT_TEST_CLI; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<CorpusKernel> load_corpus() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(corpus_dir())) {
    if (e.path().extension() == ".c") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<CorpusKernel> out;
  for (const auto& f : files) out.push_back({f.filename().string(), parse_kernel(slurp(f))});
  return out;
}

Kernel corpus_kernel(const std::string& file) { return parse_kernel(slurp(corpus_dir() / file)); }

namespace {

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

LoopLevel random_level(std::mt19937_64& rng) {
  return pick(rng, 0, 5) == 0 ? LoopLevel::innermost() : LoopLevel::depth(pick(rng, 0, 4));
}

// Consecutive levels; the last may be written as L-1.
std::vector<LoopLevel> band(std::mt19937_64& rng, int n) {
  int start = pick(rng, 0, 4);
  std::vector<LoopLevel> out;
  for (int i = 0; i < n; ++i) out.push_back(LoopLevel::depth(start + i));
  if (pick(rng, 0, 4) == 0) out.back() = LoopLevel::innermost();
  return out;
}

std::string random_comp(std::mt19937_64& rng) { return fmt::format("comp{:02d}", pick(rng, 0, 12)); }

}  // namespace

Schedule random_schedule(std::mt19937_64& rng) {
  Schedule s;
  int n = pick(rng, 1, 6);
  for (int i = 0; i < n; ++i) {
    std::string c = random_comp(rng);
    switch (pick(rng, 0, 7)) {
      case 0: s.commands.push_back(Fuse{c, random_comp(rng), random_level(rng)}); break;
      case 1: s.commands.push_back(Interchange{c, random_level(rng), random_level(rng)}); break;
      case 2: s.commands.push_back(Parallelize{c, random_level(rng)}); break;
      case 3: {
        auto b = band(rng, 2);
        s.commands.push_back(Tile2D{c, {b[0], b[1]}, {pick(rng, 2, 512), pick(rng, 2, 512)}});
        break;
      }
      case 4: {
        auto b = band(rng, 3);
        s.commands.push_back(Tile3D{c, {b[0], b[1], b[2]}, {pick(rng, 2, 512), pick(rng, 2, 512), pick(rng, 2, 512)}});
        break;
      }
      case 5: s.commands.push_back(Unroll{c, random_level(rng), pick(rng, 2, 64)}); break;
      case 6: {
        auto b = band(rng, 2);
        s.commands.push_back(Skew{c, b[0], b[1]});
        break;
      }
      default: s.commands.push_back(Reverse{c, random_level(rng)}); break;
    }
  }
  return s;
}

std::string random_kernel_source(std::mt19937_64& rng) {
  static const char* kIters[] = {"i", "j", "k"};
  int nbuf = pick(rng, 1, 3);
  std::vector<int> rank(nbuf);
  std::string src = fmt::format("#pragma kernel fuzz{} params(N={}, M={})\n", pick(rng, 0, 999), pick(rng, 1, 4),
                                pick(rng, 1, 3));
  for (int b = 0; b < nbuf; ++b) {
    rank[b] = pick(rng, 1, 2);
    src += fmt::format("long X{}", b);
    for (int r = 0; r < rank[b]; ++r) src += "[N + M + 2]";
    src += ";\n";
  }
  auto access = [&](int b, int depth) {
    std::string a = fmt::format("X{}", b);
    for (int r = 0; r < rank[b]; ++r) {
      int it = pick(rng, 0, depth - 1);
      a += fmt::format("[{} + {}]", kIters[it], pick(rng, 0, 2));
    }
    return a;
  };
  int nests = pick(rng, 1, 3);
  int comp = 0;
  for (int n = 0; n < nests; ++n) {
    int depth = pick(rng, 1, 3);
    std::string indent;
    for (int d = 0; d < depth; ++d) {
      const char* upper = pick(rng, 0, 1) ? "N" : "M";
      std::string lower = "0";
      if (d > 0 && pick(rng, 0, 3) == 0) lower = kIters[d - 1];
      src += fmt::format("{}for (int {} = {}; {} < {}; {}++)\n", indent, kIters[d], lower, kIters[d],
                         lower == "0" ? std::string(upper) : fmt::format("{} + 1", upper), kIters[d]);
      indent += "  ";
    }
    std::string rhs = access(pick(rng, 0, nbuf - 1), depth);
    int terms = pick(rng, 0, 2);
    for (int t = 0; t < terms; ++t) {
      const char* op = pick(rng, 0, 2) == 0 ? " * " : (pick(rng, 0, 1) ? " + " : " - ");
      rhs += op + (pick(rng, 0, 3) == 0 ? std::to_string(pick(rng, 1, 9)) : access(pick(rng, 0, nbuf - 1), depth));
    }
    src += fmt::format("{}// comp_ID: comp{:02d}\n{}{} = {};\n", indent, comp, indent, access(pick(rng, 0, nbuf - 1), depth),
                       rhs);
    ++comp;
  }
  return src;
}

std::vector<Schedule> single_transformations(const Kernel& kernel) {
  std::vector<Transformation> cands;
  for (const auto& c : kernel.computations) {
    int d = static_cast<int>(c.depth());
    auto L = [](int x) { return LoopLevel::depth(x); };
    for (int i = 0; i < d; ++i) {
      cands.push_back(Parallelize{c.comp_id, L(i)});
      cands.push_back(Reverse{c.comp_id, L(i)});
      cands.push_back(Unroll{c.comp_id, L(i), 2});
      cands.push_back(Unroll{c.comp_id, L(i), 3});
      for (int j = i + 1; j < d; ++j) cands.push_back(Interchange{c.comp_id, L(i), L(j)});
      if (i + 1 < d) {
        cands.push_back(Skew{c.comp_id, L(i), L(i + 1)});
        cands.push_back(Tile2D{c.comp_id, {L(i), L(i + 1)}, {2, 3}});
      }
      if (i + 2 < d) cands.push_back(Tile3D{c.comp_id, {L(i), L(i + 1), L(i + 2)}, {2, 2, 3}});
    }
    cands.push_back(Unroll{c.comp_id, LoopLevel::innermost(), 4});
    for (const auto& o : kernel.computations) {
      if (o.comp_id == c.comp_id) continue;
      int m = static_cast<int>(std::min(c.depth(), o.depth()));
      for (int l = 0; l < m; ++l) cands.push_back(Fuse{c.comp_id, o.comp_id, L(l)});
    }
  }
  std::vector<Schedule> out;
  for (auto& t : cands) {
    Schedule s{{t}};
    if (!prevalidate(s, kernel)) out.push_back(std::move(s));
  }
  return out;
}

std::vector<Schedule> random_multi_schedules(const Kernel& kernel, std::mt19937_64& rng, int count, int attempts) {
  auto singles = single_transformations(kernel);
  std::vector<Schedule> out;
  if (singles.empty()) return out;
  for (int a = 0; a < attempts && static_cast<int>(out.size()) < count; ++a) {
    Schedule s;
    int n = pick(rng, 2, 4);
    for (int i = 0; i < n; ++i) {
      const auto& pickd = singles[pick(rng, 0, static_cast<int>(singles.size()) - 1)];
      s.commands.push_back(pickd.commands.front());
    }
    if (!prevalidate(s, kernel)) out.push_back(std::move(s));
  }
  return out;
}

Pool random_pool(std::mt19937_64& rng, int runs, int length) {
  Pool p;
  p.instance = "synthetic";
  std::uniform_real_distribution<double> jump(0.0, 1.0);
  for (int r = 0; r < runs; ++r) {
    RunSeries s;
    s.best = {1.0};
    int len = pick(rng, 0, length);
    for (int t = 1; t <= len; ++t) {
      double v = s.best.back();
      if (jump(rng) < 0.3) v += std::round(jump(rng) * 8.0) / 4.0;
      s.best.push_back(v);
      s.categories.push_back("success");
    }
    p.runs.push_back(std::move(s));
  }
  return p;
}

double brute_best_of_k(const std::vector<double>& values, int K) {
  std::vector<double> maxes;
  std::size_t n = values.size();
  std::vector<std::size_t> idx(K, 0);
  while (true) {
    double m = values[idx[0]];
    for (int k = 1; k < K; ++k) m = std::max(m, values[idx[k]]);
    maxes.push_back(m);
    int k = 0;
    while (k < K && ++idx[k] == n) idx[k++] = 0;
    if (k == K) break;
  }
  return median_of(maxes, MedianConvention::Midpoint);
}

CommandResult run_command(const std::vector<std::string>& argv) {
  auto dir = scratch_dir("cmd");
  auto out_path = dir / "out";
  auto err_path = dir / "err";
  std::fflush(nullptr);
  pid_t pid = fork();
  if (pid == 0) {
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    if (!freopen(out_path.c_str(), "w", stdout) || !freopen(err_path.c_str(), "w", stderr)) _exit(127);
    execv(args[0], args.data());
    _exit(127);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  CommandResult r;
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  std::filesystem::remove_all(dir);
  return r;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / fmt::format("compilot-test-{}-{}-{:x}", tag, getpid(), rng());
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace compilot::testing
