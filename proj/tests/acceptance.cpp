// Acceptance suite: one PASS/FAIL line per headline criterion. Exits nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "fixtures/test_util.hpp"
#include "risekit/baselines.hpp"
#include "risekit/image_io.hpp"
#include "risekit/masking.hpp"
#include "risekit/metrics.hpp"
#include "risekit/rng.hpp"
#include "risekit/saliency.hpp"
#include "risekit/serve.hpp"
#include "risekit/synthetic.hpp"
#include "risekit/transport.hpp"

namespace risekit {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double MaxAbsDiff(const SaliencyMap& a, const SaliencyMap& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
  return m;
}

// --- 1. Monte Carlo estimate against exact enumeration -----------------------

Outcome BruteForceEquivalence() {
  const auto t0 = Clock::now();
  const Image image = testing::RandomImage(8, 8, 2024);
  SaliencyMap weights(8, 8);
  Philox rng(2024, 7);
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = static_cast<float>(rng.NextDouble());
  const std::vector<std::pair<std::string, SyntheticModel>> models = {
      {"constant", ConstantModel{0.5}},
      {"region_mean", RegionMeanModel{{1, 2, 5, 7}}},
      {"template_dot", TemplateDotModel{weights, 0.0}},
  };
  MaskConfig c;
  c.image_h = c.image_w = 8;
  c.grid_h = c.grid_w = 2;
  c.prob_on = 0.5;
  c.num_masks = 10000;
  c.random_shift = false;
  c.seed = 1;
  double worst = 0.0;
  std::string per_model;
  for (const auto& [name, model] : models) {
    SyntheticScorer scorer(model);
    const SaliencyMap exact = ExactSaliency(image, 2, 2, 0.5, scorer);
    const auto est = RiseSaliency({image, Target::ClassIndex(0), c}, scorer);
    const double err = MaxAbsDiff(est.saliency, exact);
    worst = std::max(worst, err);
    per_model += Fmt(" %s=%.4f", name.c_str(), err);
  }
  const double secs = Seconds(t0);
  return {worst <= 0.02 && secs < 30.0,
          Fmt("max |MC - exact| = %.4f (tol 0.02);", worst) + per_model +
              Fmt("; %.2fs (limit 30s)", secs)};
}

// --- 2. Mask distribution ----------------------------------------------------

Outcome MaskDistribution() {
  const auto t0 = Clock::now();
  MaskConfig c;
  c.num_masks = 2000;
  c.prob_on = 0.5;
  c.grid_h = c.grid_w = 7;
  c.image_h = c.image_w = 224;
  c.seed = 0;
  const MaskStatistics stats = ComputeMaskStatistics(MaskGenerator(c));
  const double se = std::sqrt(0.5 * 0.5 / c.num_masks);
  std::size_t within = 0;
  for (float m : stats.mean_map.data()) within += std::abs(m - 0.5) <= 3 * se;
  const double frac = static_cast<double>(within) / stats.mean_map.size();
  const double secs = Seconds(t0);
  const bool pass = frac >= 0.99 && stats.global_mean >= 0.47 && stats.global_mean <= 0.53 &&
                    secs < 60.0;
  return {pass, Fmt("%.2f%% of pixels within 3 SE (need >= 99%%); global mean %.4f (need "
                    "[0.47, 0.53]); %.2fs (limit 60s)",
                    100.0 * frac, stats.global_mean, secs)};
}

// --- 3 and 4. Region-detector trials ------------------------------------------

struct TrialSummary {
  int trials = 0;
  int deletion_wins = 0;
  int insertion_wins = 0;
  double del_rise = 0, del_random = 0, ins_rise = 0, ins_random = 0;
  PointingTally tally;
  double seconds = 0;
};

TrialSummary RunRegionTrials() {
  const auto t0 = Clock::now();
  constexpr int kTrials = 50;
  constexpr int kSize = 224;
  constexpr int kRegion = 56;
  TrialSummary s;
  for (int trial = 0; trial < kTrials; ++trial) {
    Philox rng(trial, 0x7472);
    const int x0 = static_cast<int>(rng.NextBelow(kSize - kRegion + 1));
    const int y0 = static_cast<int>(rng.NextBelow(kSize - kRegion + 1));
    const Region region{x0, y0, x0 + kRegion, y0 + kRegion};
    const Image image = testing::RegionImage(kSize, kSize, region, 1000 + trial);
    SyntheticScorer scorer(RegionMeanModel{region});
    const Target target = Target::ClassIndex(0);

    MaskConfig c;
    c.num_masks = 4000;
    c.seed = static_cast<std::uint64_t>(trial);
    const SaliencyMap rise = RiseSaliency({image, target, c}, scorer).saliency;
    const SaliencyMap random = RandomSaliency(kSize, kSize, 500 + trial);

    const double del_rise = Deletion(image, rise, scorer, target).auc;
    const double del_random = Deletion(image, random, scorer, target).auc;
    const double ins_rise = Insertion(image, rise, scorer, target).auc;
    const double ins_random = Insertion(image, random, scorer, target).auc;
    s.del_rise += del_rise;
    s.del_random += del_random;
    s.ins_rise += ins_rise;
    s.ins_random += ins_random;
    s.deletion_wins += del_rise < del_random;
    s.insertion_wins += ins_rise > ins_random;
    const BoundingBox box{region.x_min, region.y_min, region.x_max, region.y_max, "region"};
    s.tally.Add("region", PointingGame(rise, std::span<const BoundingBox>(&box, 1)));
    ++s.trials;
  }
  s.del_rise /= kTrials;
  s.del_random /= kTrials;
  s.ins_rise /= kTrials;
  s.ins_random /= kTrials;
  s.seconds = Seconds(t0);
  return s;
}

Outcome CausalDominance(const TrialSummary& s) {
  const int need = static_cast<int>(std::ceil(0.95 * s.trials));
  const bool pass = s.del_rise < s.del_random && s.ins_rise > s.ins_random &&
                    s.deletion_wins >= need && s.insertion_wins >= need && s.seconds < 600.0;
  return {pass, Fmt("deletion AUC rise %.4f vs random %.4f (wins %d/%d); insertion AUC rise %.4f "
                    "vs random %.4f (wins %d/%d); need >= %d wins each; %.1fs for all trials "
                    "(limit 600s)",
                    s.del_rise, s.del_random, s.deletion_wins, s.trials, s.ins_rise, s.ins_random,
                    s.insertion_wins, s.trials, need, s.seconds)};
}

Outcome PointingOnGroundTruth(const TrialSummary& s) {
  const double acc = s.tally.MeanAccuracy();
  const auto& counts = s.tally.categories().at("region");
  return {acc == 1.0, Fmt("pointing accuracy %.4f (%lld/%lld hits, need 1.0) at N=4000",
                          acc, static_cast<long long>(counts.hits),
                          static_cast<long long>(counts.hits + counts.misses))};
}

// --- 5. Sliding window against a position-by-position simulation --------------

Outcome SlidingWindowOracle() {
  const Image image = testing::RandomImage(4, 4, 77);
  testing::MeanIntensityScorer scorer;
  const SaliencyMap got =
      SlidingWindowSaliency(image, scorer, Target::ClassIndex(0), {2, 2, 0.0f});
  const Target t = Target::ClassIndex(0);
  const double base = scorer.ScoreBatch(std::span<const Image>(&image, 1), t)[0];
  SaliencyMap want(4, 4);
  for (int y0 = 0; y0 < 4; y0 += 2) {
    for (int x0 = 0; x0 < 4; x0 += 2) {
      std::vector<float> px(image.data().begin(), image.data().end());
      for (int y = y0; y < y0 + 2; ++y)
        for (int x = x0; x < x0 + 2; ++x)
          for (int ch = 0; ch < 3; ++ch) px[(y * 4 + x) * 3 + ch] = 0.0f;
      const Image occluded(4, 4, std::move(px));
      const double drop = base - scorer.ScoreBatch(std::span<const Image>(&occluded, 1), t)[0];
      for (int y = y0; y < y0 + 2; ++y)
        for (int x = x0; x < x0 + 2; ++x) want.at(y, x) = static_cast<float>(drop);
    }
  }
  return {got == want, Fmt("max |sliding - simulation| = %.3g (need exact equality)",
                           MaxAbsDiff(got, want))};
}

// --- 6. AUC identities --------------------------------------------------------

Outcome AucIdentities() {
  const double a = Auc(std::vector<CurvePoint>{{0, 1}, {1, 1}});
  const double b = Auc(std::vector<CurvePoint>{{0, 1}, {1, 0}});
  const double c = Auc(std::vector<CurvePoint>{{0, 0}, {0.5, 1}, {1, 0}});
  return {a == 1.0 && b == 0.5 && c == 0.5,
          Fmt("AUC {(0,1),(1,1)} = %.17g, {(0,1),(1,0)} = %.17g, {(0,0),(0.5,1),(1,0)} = %.17g",
              a, b, c)};
}

// --- 7. Byte-identical explain runs -------------------------------------------

int RunCli(std::vector<std::string> args) {
  args.insert(args.begin(), "risekit");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::Run(static_cast<int>(argv.size()), argv.data());
}

Outcome Determinism() {
  const auto t0 = Clock::now();
  testing::TempDir dir;
  const Region r{60, 30, 140, 110};
  SaveImage(testing::RegionImage(224, 224, r, 5), dir / "a.png");
  SaveImage(testing::RandomImage(300, 260, 6), dir / "b.png");
  auto run = [&](const std::string& out) {
    return RunCli({"explain", "--scorer", "synthetic:region:60,30,140,110", "--masks", "1000",
                   "--seed", "123", "--out", (dir / out).string(), (dir / "a.png").string(),
                   (dir / "b.png").string()});
  };
  const int rc1 = run("first");
  const int rc2 = run("second");
  bool same = rc1 == 0 && rc2 == 0;
  std::size_t bytes = 0;
  for (const char* stem : {"a", "b"}) {
    const std::string x = testing::ReadFileBytes(dir / "first" / (std::string(stem) + ".rsal"));
    const std::string y = testing::ReadFileBytes(dir / "second" / (std::string(stem) + ".rsal"));
    same = same && !x.empty() && x == y;
    bytes += x.size();
  }
  return {same, Fmt("exit codes %d/%d; RSAL dumps %s (%zu bytes compared); %.2fs", rc1, rc2,
                    same ? "byte-identical" : "DIFFER", bytes, Seconds(t0))};
}

// --- 8. Native, subprocess and HTTP scorers agree ------------------------------

Outcome AdapterEquivalence() {
  testing::TempDir dir;
  SaliencyMap weights(32, 32);
  Philox rng(9, 9);
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = static_cast<float>(rng.NextDouble());
  const SyntheticModel tmpl = TemplateDotModel{weights, 0.05};
  { std::ofstream(dir / "tmpl.json") << SyntheticModelToJson(tmpl).dump(); }
  const std::vector<std::pair<std::string, SyntheticModel>> models = {
      {"constant:0.3", ConstantModel{0.3}},
      {"region:4,6,20,30", RegionMeanModel{{4, 6, 20, 30}}},
      {"template:" + (dir / "tmpl.json").string(), tmpl},
  };
  std::vector<Image> batch;
  for (int i = 0; i < 40; ++i) batch.push_back(testing::RandomImage(32, 32, 300 + i));
  const Target target = Target::ClassIndex(0);
  double worst = 0.0;
  std::size_t compared = 0;
  for (const auto& [spec, model] : models) {
    SyntheticScorer native(model);
    SubprocessScorer child(std::string(RISEKIT_STUB_PATH) + " --stdio --model '" + spec + "'");
    HttpScoreServer server(std::make_shared<SyntheticScorer>(model), spec);
    server.Start();
    HttpScorer remote(server.url());
    const auto a = ScoreChecked(native, batch, target, 0);
    const auto b = ScoreChecked(child, batch, target, 0);
    const auto c = ScoreChecked(remote, batch, target, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst = std::max({worst, std::abs(a[i] - b[i]), std::abs(a[i] - c[i])});
    }
    compared += a.size();
  }
  return {worst <= 1e-6, Fmt("max score difference %.3g over %zu images x 3 models (tol 1e-6)",
                             worst, compared)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace risekit

int main() {
  using namespace risekit;
  TrialSummary trials;
  bool trials_done = false;
  auto region_trials = [&]() -> const TrialSummary& {
    if (!trials_done) {
      trials = RunRegionTrials();
      trials_done = true;
    }
    return trials;
  };
  const std::vector<Criterion> criteria = {
      {"brute-force equivalence", BruteForceEquivalence},
      {"mask distribution", MaskDistribution},
      {"causal-metric dominance", [&] { return CausalDominance(region_trials()); }},
      {"pointing on synthetic ground truth", [&] { return PointingOnGroundTruth(region_trials()); }},
      {"sliding-window oracle", SlidingWindowOracle},
      {"AUC unit identities", AucIdentities},
      {"determinism", Determinism},
      {"adapter equivalence", AdapterEquivalence},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("raised: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
