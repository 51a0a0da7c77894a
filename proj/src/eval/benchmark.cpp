#include "pursuit/eval/benchmark.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <spdlog/spdlog.h>

#include "pursuit/eval/metrics.hpp"
#include "pursuit/model/trainer.hpp"

namespace pursuit {

Ablation parse_ablation(const std::string& flags) {
  Ablation a;
  a.omega_mm = false;
  std::stringstream ss(flags);
  std::string tok;
  bool any = false;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    any = true;
    if (tok == "gnn") a.gnn = true;
    else if (tok == "mi") a.mi = true;
    else if (tok == "omega") a.omega_mm = true;
    else if (tok != "lstm") throw ConfigError("unknown ablation flag '" + tok + "'");
  }
  if (!any) throw ConfigError("empty ablation");
  if (a.mi && !a.omega_mm) throw ConfigError("ablation 'mi' requires 'omega'");
  a.name = ablation_flags(a);
  return a;
}

std::string ablation_flags(const Ablation& a) {
  std::string s;
  auto add = [&](const char* f) { s += (s.empty() ? "" : "+") + std::string(f); };
  if (a.gnn) add("gnn");
  if (a.omega_mm) add("omega");
  if (a.mi) add("mi");
  return s.empty() ? "lstm" : s;
}

std::vector<Ablation> standard_ablations() {
  std::vector<Ablation> out;
  for (const char* f : {"lstm", "omega", "omega,mi", "gnn,omega", "gnn,omega,mi"}) out.push_back(parse_ablation(f));
  return out;
}

ModelConfig apply_ablation(ModelConfig cfg, const Ablation& a) {
  cfg.use_gnn = a.gnn;
  cfg.use_omega_mm = a.omega_mm;
  cfg.use_mi = a.mi;
  return cfg;
}

MetricReport evaluate_network(const Network& net, std::span<const Sample> samples, const EvalParams& params) {
  if (samples.empty()) throw std::invalid_argument("empty test set");
  const auto pred = predict_all(net, samples);
  std::vector<Vec2> truth;
  for (const auto& s : samples) truth.push_back(s.target);
  MetricReport r;
  const ModelConfig& c = net.config();
  r.gnn = c.use_gnn;
  r.omega_mm = c.use_omega_mm;
  r.mi = c.use_mi;
  r.horizon = c.horizon;
  r.model = ablation_flags({"", c.use_gnn, c.use_omega_mm, c.use_mi});
  r.ll = log_likelihood(pred, truth);
  r.ade = ade(pred, truth, params.ade_top_component);
  r.ct = ct_delta(pred, truth, params.delta, params.p_threshold, params.ct_samples);
  r.count = samples.size();
  return r;
}

std::vector<MetricReport> with_mean_rows(std::vector<MetricReport> rows) {
  using Key = std::tuple<std::string, std::string, int>;
  std::vector<Key> order;
  std::map<Key, std::vector<const MetricReport*>> groups;
  for (const auto& r : rows) {
    if (!r.seed) continue;
    Key k{r.dataset, r.model, r.horizon};
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&r);
  }
  std::vector<MetricReport> means;
  for (const auto& k : order) {
    const auto& g = groups[k];
    MetricReport m = *g.front();
    m.seed.reset();
    m.ll = m.ade = m.ct = 0.0;
    m.count = 0;
    m.error.clear();
    int ok = 0;
    for (const auto* r : g) {
      if (!r->error.empty()) continue;
      m.ll += r->ll;
      m.ade += r->ade;
      m.ct += r->ct;
      m.count += r->count;
      ++ok;
    }
    if (ok == 0) {
      m.error = "no evaluated seeds";
      m.ll = m.ade = m.ct = std::numeric_limits<double>::quiet_NaN();
    } else {
      m.ll /= ok;
      m.ade /= ok;
      m.ct /= ok;
    }
    means.push_back(std::move(m));
  }
  rows.insert(rows.end(), means.begin(), means.end());
  return rows;
}

std::vector<MetricReport> run_benchmark(std::span<const BenchmarkDataset> datasets, std::span<const Ablation> ablations,
                                        std::span<const int> horizons, std::span<const std::uint64_t> seeds,
                                        const ModelProvider& provider, const EvalParams& params) {
  std::vector<MetricReport> rows;
  for (const auto& ds : datasets)
    for (const auto& a : ablations)
      for (int h : horizons)
        for (std::uint64_t seed : seeds) {
          MetricReport r;
          try {
            auto it = ds.test.find(h);
            if (it == ds.test.end() || it->second.empty())
              throw std::runtime_error("no test samples for horizon " + std::to_string(h));
            const Network net = provider(ds.name, a, h, seed);
            r = evaluate_network(net, it->second, params);
          } catch (const std::exception& e) {
            r.error = e.what();
            r.ll = r.ade = r.ct = std::numeric_limits<double>::quiet_NaN();
            spdlog::warn("{} / {} / T={} / seed {}: {}", ds.name, a.name, h, seed, e.what());
          }
          r.dataset = ds.name;
          r.model = a.name;
          r.gnn = a.gnn;
          r.omega_mm = a.omega_mm;
          r.mi = a.mi;
          r.horizon = h;
          r.seed = seed;
          rows.push_back(std::move(r));
        }
  return with_mean_rows(std::move(rows));
}

void write_report_csv(std::ostream& out, std::span<const MetricReport> rows) {
  out << kReportHeader << '\n';
  auto num = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
  };
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.model << ',' << int(r.gnn) << ',' << int(r.omega_mm) << ',' << int(r.mi) << ','
        << r.horizon << ',' << (r.seed ? std::to_string(*r.seed) : std::string("mean")) << ',' << num(r.ll) << ','
        << num(r.ade) << ',' << num(r.ct) << '\n';
  }
}

}  // namespace pursuit
