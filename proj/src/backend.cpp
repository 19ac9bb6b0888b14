#include "compilot/backend.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "compilot/error.hpp"
#include "subprocess.hpp"

namespace compilot {

namespace {

std::mutex g_timing_mutex;
std::vector<TimingSlot> g_timing_log;

std::string clip(std::string s, std::size_t n = 2000) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  if (s.size() > n) s = s.substr(0, n) + "...";
  return s;
}

std::uint64_t prefix_points(const Kernel& kernel, const Computation& comp, std::size_t depth) {
  if (depth == 0) return 1;
  Kernel k;
  k.name = kernel.name;
  k.params = kernel.params;
  k.buffers = kernel.buffers;
  Computation c;
  c.comp_id = comp.comp_id;
  c.loops.assign(comp.loops.begin(), comp.loops.begin() + static_cast<std::ptrdiff_t>(depth));
  const BufferDecl& b = kernel.buffers.front();
  c.body.target = Access{b.name, std::vector<AffineExpr>(b.extents.size(), AffineExpr(0))};
  c.body.value = Expr::make_value(AffineExpr(0));
  k.computations.push_back(std::move(c));
  return count_instances(k).front();
}

bool integer_kernel(const Kernel& k) {
  return std::all_of(k.buffers.begin(), k.buffers.end(),
                     [](const BufferDecl& b) { return b.type == ScalarType::Long; });
}

}  // namespace

std::string result_kind(const BackendResult& r) {
  static const char* names[] = {"success", "compiler_crash", "runtime_crash", "timeout"};
  return names[r.index()];
}

std::string result_message(const BackendResult& r) {
  if (auto* c = std::get_if<CompilerCrash>(&r)) return c->message;
  if (auto* c = std::get_if<RuntimeCrash>(&r)) return c->message;
  if (std::holds_alternative<Timeout>(r)) return "execution exceeded the time limit";
  return "";
}

void validate(const BackendConfig& cfg) {
  if (cfg.reps < 1) throw ConfigError("backend reps must be >= 1");
  if (cfg.warmups < 0) throw ConfigError("backend warmups must be >= 0");
  if (cfg.timeout_s < 1) throw ConfigError("backend timeout must be >= 1 s");
  if (cfg.threads < 0) throw ConfigError("backend threads must be >= 0");
  if (cfg.model.threads < 1) throw ConfigError("cost model threads must be >= 1");
  if (cfg.model.unit_cost_ms <= 0) throw ConfigError("cost model unit cost must be positive");
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double simulate_cost(const TransformedKernel& tk, const Kernel& original, const CostModel& model) {
  const Kernel& k = tk.kernel;
  auto instances = count_instances(original);
  double total = 0;
  for (std::size_t ci = 0; ci < k.computations.size(); ++ci) {
    const Computation& c = k.computations[ci];
    auto oi = original.index_of(c.comp_id);
    if (!oi) throw InternalError("computation " + c.comp_id + " missing from original kernel");
    double t = static_cast<double>(instances[*oi]) * model.unit_cost_ms;

    for (std::size_t d = 0; d < c.loops.size(); ++d) {
      if (!c.loops[d].parallel) continue;
      double outer = static_cast<double>(prefix_points(k, c, d));
      double with = static_cast<double>(prefix_points(k, c, d + 1));
      double trip = outer > 0 ? with / outer : 0;
      double par = std::min(static_cast<double>(model.threads), std::max(1.0, trip));
      t = t / par + outer * model.region_overhead_ms;
      break;
    }

    for (const auto& cmd : tk.provenance.commands) {
      double f = 1.0;
      if (std::holds_alternative<Tile2D>(cmd)) f = model.tile2d;
      else if (std::holds_alternative<Tile3D>(cmd)) f = model.tile3d;
      else if (std::holds_alternative<Unroll>(cmd)) f = model.unroll;
      if (f == 1.0) continue;
      auto ti = k.index_of(target_comp(cmd));
      if (!ti) continue;
      if (*ti == ci || shared_depth(k, *ti, ci) > 0) t *= f;
    }

    for (std::size_t o = 0; o < k.computations.size(); ++o) {
      if (o == ci) continue;
      auto oo = original.index_of(k.computations[o].comp_id);
      if (oo && shared_depth(k, ci, o) > shared_depth(original, *oi, *oo)) {
        t *= model.fused;
        break;
      }
    }
    total += t;
  }
  return total;
}

std::vector<TimingSlot> timing_log() {
  std::lock_guard lock(g_timing_mutex);
  return g_timing_log;
}

Backend::Backend(BackendConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  if (cfg_.mode == BackendMode::Real) {
    if (cfg_.work_dir.empty()) {
      std::random_device rd;
      dir_ = std::filesystem::temp_directory_path() / fmt::format("compilot-{:016x}", (std::uint64_t{rd()} << 32) ^ rd());
      owns_dir_ = true;
    } else {
      dir_ = cfg_.work_dir;
    }
    std::filesystem::create_directories(dir_);
  }
}

Backend::~Backend() {
  if (owns_dir_) {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
}

Measurement Backend::measure_baseline(const Kernel& kernel) {
  auto r = measure(untransformed(kernel), kernel);
  if (auto* m = std::get_if<Measurement>(&r)) return *m;
  const auto& res = std::get<BackendResult>(r);
  throw BackendError(fmt::format("baseline {}: {}", result_kind(res), result_message(res)));
}

BackendResult Backend::run_schedule(const TransformedKernel& tk, const Kernel& original, const Measurement& baseline) {
  auto r = measure(tk, original);
  if (auto* res = std::get_if<BackendResult>(&r)) return *res;
  const auto& m = std::get<Measurement>(r);
  if (m.checksum && baseline.checksum && *m.checksum != *baseline.checksum && integer_kernel(original)) {
    return RuntimeCrash{fmt::format("checksum mismatch: expected {:016x}, got {:016x}", *baseline.checksum, *m.checksum)};
  }
  return BackendSuccess{m.median_ms, baseline.median_ms / m.median_ms, m.min_ms};
}

std::variant<Measurement, BackendResult> Backend::measure(const TransformedKernel& tk, const Kernel& original) {
  if (cfg_.mode == BackendMode::Simulated) {
    double t = simulate_cost(tk, original, cfg_.model);
    if (!(t > 0)) t = cfg_.model.unit_cost_ms;
    return Measurement{t, t, {t}, std::nullopt};
  }

  std::uint64_t id;
  {
    std::lock_guard lock(g_timing_mutex);
    id = counter_++;
  }
  auto src = dir_ / fmt::format("k{}.c", id);
  auto bin = dir_ / fmt::format("k{}", id);
  {
    std::ofstream f(src);
    if (!f) throw IoError("cannot write " + src.string());
    f << emit_c(tk);
  }
  std::vector<std::string> argv;
  {
    std::istringstream in(cfg_.compiler);
    std::string word;
    while (in >> word) {
      for (auto [key, val] : {std::pair{"{src}", src.string()}, std::pair{"{bin}", bin.string()}}) {
        for (auto p = word.find(key); p != std::string::npos; p = word.find(key)) word.replace(p, 5, val);
      }
      argv.push_back(word);
    }
  }
  auto timeout = std::chrono::seconds(cfg_.timeout_s);
  spdlog::debug("compiling {}", src.string());
  auto cr = detail::run_process(argv, {}, timeout);
  if (cr.timed_out) return BackendResult{CompilerCrash{"compilation exceeded the time limit"}};
  if (cr.exit_code != 0) return BackendResult{CompilerCrash{clip(cr.err.empty() ? cr.out : cr.err)}};

  std::map<std::string, std::string> env;
  if (cfg_.threads > 0) env["OMP_NUM_THREADS"] = std::to_string(cfg_.threads);
  Measurement m;
  for (int rep = 0; rep < cfg_.warmups + cfg_.reps; ++rep) {
    detail::ProcessResult pr;
    {
      std::lock_guard lock(g_timing_mutex);
      TimingSlot slot;
      slot.sequence = g_timing_log.size();
      slot.start = std::chrono::steady_clock::now();
      pr = detail::run_process({bin.string()}, env, timeout);
      slot.end = std::chrono::steady_clock::now();
      g_timing_log.push_back(slot);
    }
    if (pr.timed_out) return BackendResult{Timeout{}};
    if (pr.signal != 0) return BackendResult{RuntimeCrash{fmt::format("terminated by signal {}", pr.signal)}};
    if (pr.exit_code != 0) {
      return BackendResult{RuntimeCrash{fmt::format("exit status {}: {}", pr.exit_code, clip(pr.err))}};
    }
    std::optional<double> time;
    std::optional<std::uint64_t> sum;
    std::istringstream lines(pr.out);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.rfind("TIME_MS: ", 0) == 0) time = std::stod(line.substr(9));
      if (line.rfind("CHECKSUM: ", 0) == 0) sum = std::stoull(line.substr(10), nullptr, 16);
    }
    if (!time || !sum) return BackendResult{RuntimeCrash{"missing TIME_MS or CHECKSUM line"}};
    if (m.checksum && *m.checksum != *sum) return BackendResult{RuntimeCrash{"checksum differs between repetitions"}};
    m.checksum = sum;
    if (rep >= cfg_.warmups) m.samples.push_back(std::max(*time, 1e-6));
  }
  m.median_ms = median_of(m.samples);
  m.min_ms = *std::min_element(m.samples.begin(), m.samples.end());
  std::error_code ec;
  std::filesystem::remove(bin, ec);
  return m;
}

}  // namespace compilot
