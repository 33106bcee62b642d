#include "cli_app.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "risekit/baselines.hpp"
#include "risekit/error.hpp"
#include "risekit/image_io.hpp"
#include "risekit/masking.hpp"
#include "risekit/metrics.hpp"
#include "risekit/saliency.hpp"
#include "risekit/transport.hpp"

namespace risekit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void Log(const std::string& msg) { std::fprintf(stderr, "risekit: %s\n", msg.c_str()); }

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kInvalidDimension:
    case ErrorKind::kInvalidConfig:
    case ErrorKind::kEnumerationBound:
      return kExitConfig;
    case ErrorKind::kProbe:
    case ErrorKind::kTransport:
    case ErrorKind::kProtocol:
    case ErrorKind::kRemote:
      return kExitTransport;
    case ErrorKind::kIo:
    case ErrorKind::kData:
      return kExitData;
  }
  return kExitData;
}

int ExitCodeFor(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    return ExitCodeFor(e.kind());
  } catch (...) {
    return kExitData;
  }
}

std::string Describe(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

struct Options {
  std::string scorer;
  int masks = 4000;
  std::vector<int> grid = {7, 7};
  double prob = 0.5;
  std::uint64_t seed = 0;
  std::string target = "0";
  int steps = 100;
  int blur_kernel = 11;
  double blur_sigma = 5.0;
  std::string out;
  bool strict = false;
  bool resume = false;
  std::vector<int> image_size = {224, 224};
  int batch = 32;
  std::string normalization = "analytic";
  int workers = 0;
  float alpha = 0.5f;
  int chunk = 256;
  std::vector<std::string> inputs;

  // evaluate
  std::string method = "rise";
  std::string saliency_dir;
  int window = 64;
  int stride = 8;
  // point
  std::string boxes;
  std::string category_map;
  // masks
  bool verify = false;
  bool stats_only = false;
};

void AddCommon(CLI::App* cmd, Options& o, bool with_images) {
  cmd->add_option("--scorer", o.scorer,
                  "synthetic:<model> | subprocess:<command> | http:<url>");
  cmd->add_option("--masks", o.masks, "Number of random masks N")->check(CLI::PositiveNumber);
  cmd->add_option("--grid", o.grid, "Mask grid cells h w")->expected(2);
  cmd->add_option("--prob", o.prob, "Probability p that a grid cell is on");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--image-size", o.image_size, "Scorer input size H W")->expected(2);
  cmd->add_option("--chunk", o.chunk, "Masks generated per chunk")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory")->required();
  if (!with_images) return;
  cmd->add_option("--target", o.target, "Class index, or next:<token>|<context tokens>");
  cmd->add_option("--batch", o.batch, "Images per scorer call")->check(CLI::PositiveNumber);
  cmd->add_option("--normalization", o.normalization, "analytic | empirical")
      ->check(CLI::IsMember({"analytic", "empirical"}));
  cmd->add_option("--workers", o.workers, "Images processed concurrently (0 = cores)");
  cmd->add_flag("--strict", o.strict, "Abort on the first per-image failure");
  cmd->add_flag("--resume", o.resume, "Skip images whose sidecar already exists");
  cmd->add_option("inputs", o.inputs, "Image files or directories")->required();
}

void AddMetricOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--steps", o.steps, "Curve steps; pixels per step = ceil(H*W/steps)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--blur-kernel", o.blur_kernel, "Insertion blur kernel size (odd)");
  cmd->add_option("--blur-sigma", o.blur_sigma, "Insertion blur sigma");
}

// Splices "key = value" lines from --config files in right after the
// subcommand name, so flags given on the command line (parsed later, last
// value wins) take precedence over the file.
std::vector<std::string> ExpandConfig(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] != "--config" && args[i].rfind("--config=", 0) != 0) continue;
    std::string path;
    std::size_t erase_count = 1;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) Fail(ErrorKind::kInvalidConfig, "--config needs a file");
      path = args[i + 1];
      erase_count = 2;
    } else {
      path = args[i].substr(9);
    }
    std::ifstream in(path);
    if (!in) Fail(ErrorKind::kInvalidConfig, "cannot read config file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto eq = line.find('=');
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      if (trim(line).empty()) continue;
      if (eq == std::string::npos) {
        Fail(ErrorKind::kInvalidConfig,
             path + ":" + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
        from_file.push_back("--" + key);
        from_file.push_back(value);
        continue;
      }
      if (value == "true") {
        from_file.push_back("--" + key);
        continue;
      }
      if (value == "false") continue;
      from_file.push_back("--" + key);
      std::istringstream words(value);
      for (std::string w; words >> w;) from_file.push_back(w);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + erase_count));
    --i;
  }
  if (!from_file.empty()) {
    const auto sub = std::find_if(args.begin(), args.end(),
                                  [](const std::string& a) { return !a.empty() && a[0] != '-'; });
    const auto at = sub == args.end() ? args.begin() : sub + 1;
    args.insert(at, from_file.begin(), from_file.end());
  }
  return args;
}

bool IsImageFile(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// Expands directories, checks existence and unique stems. Nothing is written
// before this succeeds.
std::vector<fs::path> ResolveInputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && IsImageFile(entry.path())) found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      Fail(ErrorKind::kInvalidConfig, "input '" + in + "' does not exist");
    }
  }
  if (files.empty()) Fail(ErrorKind::kInvalidConfig, "no input images");
  std::set<std::string> stems;
  for (const auto& f : files) {
    if (!stems.insert(f.stem().string()).second) {
      Fail(ErrorKind::kInvalidConfig, "two inputs share the name '" + f.stem().string() + "'");
    }
  }
  return files;
}

MaskConfig MakeMaskConfig(const Options& o) {
  MaskConfig c;
  c.grid_h = o.grid[0];
  c.grid_w = o.grid[1];
  c.prob_on = o.prob;
  c.num_masks = o.masks;
  c.image_h = o.image_size[0];
  c.image_w = o.image_size[1];
  c.seed = o.seed;
  c.chunk_size = o.chunk;
  c.Validate();
  return c;
}

std::shared_ptr<Scorer> MakeScorerFromOptions(const Options& o) {
  std::string spec = o.scorer;
  if (spec.empty()) {
    if (std::getenv("RISEKIT_SCORER_URL") == nullptr) {
      Fail(ErrorKind::kInvalidConfig, "--scorer is required (or set RISEKIT_SCORER_URL)");
    }
    spec = "http:";
  }
  return MakeThreadSafe(MakeScorer(spec, o.batch));
}

void WriteJson(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
  if (!out.flush()) Fail(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kData, "bad JSON in '" + path.string() + "': " + e.what());
  }
}

int WorkerCount(const Options& o, const Scorer& scorer, std::size_t items) {
  int n = o.workers > 0 ? o.workers : static_cast<int>(std::thread::hardware_concurrency());
  if (scorer.max_in_flight() > 0) n = std::min(n, scorer.max_in_flight());
  n = std::max(n, 1);
  if (!scorer.reentrant()) n = 1;
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), items));
}

// Runs fn(i) for every item on a bounded pool. Failures are logged and
// recorded; with `strict` the first failure stops further work. Returns the
// exit code of the first failure (by item order), or 0.
template <class Fn>
int ForEachItem(std::size_t items, int workers, bool strict,
                const std::vector<std::string>& labels, Fn fn) {
  std::vector<std::exception_ptr> errors(items);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= items) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        Log(labels[i] + ": " + Describe(errors[i]));
        if (strict) stop.store(true);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) return ExitCodeFor(e);
  }
  return kExitOk;
}

std::vector<std::string> Stems(const std::vector<fs::path>& files) {
  std::vector<std::string> out;
  for (const auto& f : files) out.push_back(f.stem().string());
  return out;
}

void LogWarnings(const std::string& label, const ExplainResult& r) {
  for (const auto& w : r.warnings) Log(label + ": warning: " + w);
}

int CmdExplain(const Options& o) {
  const auto files = ResolveInputs(o.inputs);
  const MaskConfig mask_config = MakeMaskConfig(o);
  const Target target = Target::Parse(o.target);
  const Normalization norm = ParseNormalization(o.normalization);
  if (!(o.alpha >= 0.0f && o.alpha <= 1.0f)) Fail(ErrorKind::kInvalidConfig, "--alpha outside [0,1]");
  auto scorer = MakeScorerFromOptions(o);
  const fs::path out(o.out);
  fs::create_directories(out);
  const auto labels = Stems(files);
  const ImageSize size{mask_config.image_h, mask_config.image_w};
  ExplainOptions eo;
  eo.batch_size = o.batch;

  const int rc = ForEachItem(files.size(), WorkerCount(o, *scorer, files.size()), o.strict, labels,
                             [&](std::size_t i) {
    const std::string& stem = labels[i];
    const fs::path sidecar = out / (stem + ".json");
    if (o.resume && fs::exists(sidecar)) return;
    ExplainRequest req{LoadImage(files[i], size), target, mask_config, norm};
    const ExplainResult r = RiseSaliency(req, *scorer, eo);
    LogWarnings(stem, r);
    SaveImage(RenderHeatmap(r.saliency, req.image, o.alpha), out / (stem + ".heatmap.png"));
    WriteRsal(r.saliency, out / (stem + ".rsal"));
    json meta = ExplainSidecar(req, r);
    meta["image"] = files[i].string();
    meta["scorer"] = scorer->name();
    WriteJson(sidecar, meta);
    std::printf("%s: explained in %.2fs (f(I) = %.6g)\n", stem.c_str(), r.elapsed_s,
                r.score_unmasked);
  });
  return rc;
}

int CmdEvaluate(const Options& o) {
  const auto files = ResolveInputs(o.inputs);
  const MaskConfig mask_config = MakeMaskConfig(o);
  const Target target = Target::Parse(o.target);
  const Normalization norm = ParseNormalization(o.normalization);
  static const std::set<std::string> kMethods = {"rise", "random", "sliding", "flat", "rsal"};
  if (!kMethods.count(o.method)) Fail(ErrorKind::kInvalidConfig, "unknown --method '" + o.method + "'");
  if (o.method == "rsal" && o.saliency_dir.empty()) {
    Fail(ErrorKind::kInvalidConfig, "--method rsal needs --saliency-dir");
  }
  GaussianKernel1d(o.blur_kernel, o.blur_sigma);  // validates the blur flags
  SlidingWindowConfig sw{o.window, o.stride, 0.0f};
  if (o.method == "sliding") sw.Validate();
  auto scorer = MakeScorerFromOptions(o);
  const fs::path out(o.out);
  fs::create_directories(out);
  const auto labels = Stems(files);
  const ImageSize size{mask_config.image_h, mask_config.image_w};
  const int num_pixels = size.height * size.width;
  const int pps = (num_pixels + o.steps - 1) / o.steps;

  std::vector<double> del_auc(files.size(), 0.0);
  std::vector<double> ins_auc(files.size(), 0.0);
  std::vector<char> done(files.size(), 0);

  const int rc = ForEachItem(files.size(), WorkerCount(o, *scorer, files.size()), o.strict, labels,
                             [&](std::size_t i) {
    const std::string& stem = labels[i];
    const fs::path summary = out / (stem + ".json");
    if (o.resume && fs::exists(summary)) {
      const json j = ReadJson(summary);
      del_auc[i] = j.at("deletion_auc").get<double>();
      ins_auc[i] = j.at("insertion_auc").get<double>();
      done[i] = 1;
      return;
    }
    const Image image = LoadImage(files[i], size);
    SaliencyMap saliency;
    if (o.method == "rise") {
      ExplainOptions eo;
      eo.batch_size = o.batch;
      const auto r = RiseSaliency({image, target, mask_config, norm}, *scorer, eo);
      LogWarnings(stem, r);
      saliency = r.saliency;
    } else if (o.method == "random") {
      saliency = RandomSaliency(size.height, size.width, o.seed + i);
    } else if (o.method == "sliding") {
      saliency = SlidingWindowSaliency(image, *scorer, target, sw, o.batch);
    } else if (o.method == "flat") {
      saliency = SaliencyMap(size.height, size.width, 1.0f);
    } else {
      saliency = ReadRsal(fs::path(o.saliency_dir) / (stem + ".rsal"));
      if (saliency.height() != size.height || saliency.width() != size.width) {
        Fail(ErrorKind::kData, stem + ": saliency dump size differs from --image-size");
      }
    }
    DeletionOptions dopt;
    dopt.pixels_per_step = pps;
    dopt.batch_size = o.batch;
    InsertionOptions iopt;
    iopt.pixels_per_step = pps;
    iopt.blur_kernel = o.blur_kernel;
    iopt.blur_sigma = o.blur_sigma;
    iopt.batch_size = o.batch;
    const MetricCurve del = Deletion(image, saliency, *scorer, target, dopt);
    const MetricCurve ins = Insertion(image, saliency, *scorer, target, iopt);
    WriteCurveCsv(del, out / (stem + ".deletion.csv"));
    WriteJson(out / (stem + ".deletion.json"), CurveSidecar("deletion", del, pps, 0, 0));
    WriteCurveCsv(ins, out / (stem + ".insertion.csv"));
    WriteJson(out / (stem + ".insertion.json"),
              CurveSidecar("insertion", ins, pps, o.blur_kernel, o.blur_sigma));
    WriteJson(summary, {{"image", files[i].string()},
                        {"method", o.method},
                        {"deletion_auc", del.auc},
                        {"insertion_auc", ins.auc}});
    del_auc[i] = del.auc;
    ins_auc[i] = ins.auc;
    done[i] = 1;
    std::printf("%s: deletion %.4f  insertion %.4f\n", stem.c_str(), del.auc, ins.auc);
  });

  double del_sum = 0.0;
  double ins_sum = 0.0;
  int count = 0;
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!done[i]) {
      failed.push_back(labels[i]);
      continue;
    }
    del_sum += del_auc[i];
    ins_sum += ins_auc[i];
    ++count;
  }
  if (count == 0) {
    Log("no image was evaluated");
    return rc == kExitOk ? kExitData : rc;
  }
  json agg = {
      {"mean_deletion_auc", del_sum / count},
      {"mean_insertion_auc", ins_sum / count},
      {"num_images", count},
      {"failed", failed},
      {"method", o.method},
      {"seed", o.seed},
      {"num_masks", o.masks},
      {"grid", o.grid},
      {"prob_on", o.prob},
      {"normalization", o.normalization},
      {"target", target.ToString()},
      {"pixels_per_step", pps},
      {"blur_kernel", o.blur_kernel},
      {"blur_sigma", o.blur_sigma},
  };
  WriteJson(out / "evaluate.json", agg);
  std::printf("mean deletion AUC %.6f, mean insertion AUC %.6f over %d images\n",
              del_sum / count, ins_sum / count, count);
  return rc;
}

int CmdPoint(const Options& o) {
  const auto files = ResolveInputs(o.inputs);
  const MaskConfig mask_config = MakeMaskConfig(o);
  const Normalization norm = ParseNormalization(o.normalization);
  const auto records = LoadBoxesJsonl(o.boxes);
  std::map<std::string, int> category_map;
  if (!o.category_map.empty()) {
    try {
      category_map = ReadJson(o.category_map).get<std::map<std::string, int>>();
    } catch (const json::exception& e) {
      Fail(ErrorKind::kInvalidConfig, std::string("bad --category-map: ") + e.what());
    }
  }
  auto scorer = MakeScorerFromOptions(o);
  const fs::path out(o.out);
  fs::create_directories(out);

  std::map<std::string, fs::path> by_stem;
  for (const auto& f : files) by_stem[f.stem().string()] = f;

  // image_id -> category -> boxes
  std::map<std::string, std::map<std::string, std::vector<BoundingBox>>> grouped;
  for (const auto& r : records) grouped[r.image_id][r.box.category].push_back(r.box);

  json skipped = json::array();
  struct Job {
    std::string image_id;
    fs::path path;
    std::vector<std::string> categories;
    std::vector<Target> targets;
  };
  std::vector<Job> jobs;
  for (const auto& [image_id, cats] : grouped) {
    const auto it = by_stem.find(image_id);
    if (it == by_stem.end()) {
      for (const auto& [cat, boxes] : cats) {
        skipped.push_back({{"image_id", image_id}, {"category", cat}, {"reason", "image not found"}});
      }
      continue;
    }
    Job job{image_id, it->second, {}, {}};
    for (const auto& [cat, boxes] : cats) {
      std::optional<int> cls;
      if (const auto m = category_map.find(cat); m != category_map.end()) {
        cls = m->second;
      } else if (category_map.empty() && !cat.empty() &&
                 std::all_of(cat.begin(), cat.end(), ::isdigit)) {
        cls = std::stoi(cat);
      }
      if (!cls) {
        skipped.push_back({{"image_id", image_id}, {"category", cat}, {"reason", "unknown category"}});
        continue;
      }
      job.categories.push_back(cat);
      job.targets.push_back(Target::ClassIndex(*cls));
    }
    if (!job.targets.empty()) jobs.push_back(std::move(job));
  }

  std::vector<std::string> labels;
  for (const auto& j : jobs) labels.push_back(j.image_id);
  std::mutex mu;
  PointingTally tally;
  json hits = json::array();
  ExplainOptions eo;
  eo.batch_size = o.batch;
  const ImageSize size{mask_config.image_h, mask_config.image_w};

  const int rc = ForEachItem(jobs.size(), WorkerCount(o, *scorer, std::max<std::size_t>(jobs.size(), 1)),
                             o.strict, labels, [&](std::size_t i) {
    const Job& job = jobs[i];
    const Image image = LoadImage(job.path, size);
    const auto results = ExplainSequence(image, job.targets, *scorer, mask_config, norm, eo);
    PointingTally local;
    json local_hits = json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
      // Boxes are in original image coordinates only if no resize happened;
      // they are interpreted in scorer input coordinates.
      const auto& boxes = grouped.at(job.image_id).at(job.categories[k]);
      const bool hit = PointingGame(results[k].saliency, boxes);
      const PixelCoord peak = ArgmaxPixel(results[k].saliency);
      local.Add(job.categories[k], hit);
      local_hits.push_back({{"image_id", job.image_id},
                            {"category", job.categories[k]},
                            {"hit", hit},
                            {"peak", {peak.y, peak.x}}});
    }
    std::lock_guard lock(mu);
    tally.Merge(local);
    for (auto& h : local_hits) hits.push_back(std::move(h));
  });

  if (tally.empty()) {
    Log("no pointing results (all entries skipped or failed)");
    return rc == kExitOk ? kExitData : rc;
  }
  std::sort(hits.begin(), hits.end(), [](const json& a, const json& b) {
    return std::tie(a["image_id"].get_ref<const std::string&>(), a["category"].get_ref<const std::string&>()) <
           std::tie(b["image_id"].get_ref<const std::string&>(), b["category"].get_ref<const std::string&>());
  });
  json report = tally.ToJson();
  report["skipped"] = skipped;
  report["skipped_count"] = skipped.size();
  report["results"] = hits;
  report["seed"] = o.seed;
  report["num_masks"] = o.masks;
  WriteJson(out / "pointing.json", report);
  std::printf("pointing accuracy %.4f over %zu categories (%zu skipped)\n", tally.MeanAccuracy(),
              tally.categories().size(), skipped.size());
  return rc;
}

std::string Hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int CmdMasks(const Options& o) {
  const MaskConfig config = MakeMaskConfig(o);
  const MaskGenerator generator(config);
  const fs::path out(o.out);
  fs::create_directories(out);
  json report = {
      {"num_masks", config.num_masks},
      {"grid", {config.grid_h, config.grid_w}},
      {"prob_on", config.prob_on},
      {"seed", config.seed},
      {"image_size", {config.image_h, config.image_w}},
      {"cell", {config.cell_h(), config.cell_w()}},
      {"upsampled", {config.upsampled_h(), config.upsampled_w()}},
      {"offset_range", {config.offset_range_h(), config.offset_range_w()}},
  };
  std::printf("cell C_H x C_W = %d x %d, upsampled %d x %d, crop offsets in [0,%d) x [0,%d)\n",
              config.cell_h(), config.cell_w(), config.upsampled_h(), config.upsampled_w(),
              config.offset_range_h(), config.offset_range_w());
  if (!o.stats_only) {
    const fs::path cache = out / "masks.rmsk";
    const std::uint64_t hash = WriteRmsk(generator, cache);
    report["cache"] = cache.string();
    report["hash"] = Hex64(hash);
    std::printf("wrote %s (hash %s)\n", cache.string().c_str(), Hex64(hash).c_str());
    if (o.verify) {
      const MaskCache loaded = ReadRmsk(cache);
      const std::uint64_t reloaded = HashMasks(loaded.masks);
      report["verified"] = reloaded == hash && loaded.seed == config.seed;
      if (!report["verified"].get<bool>()) {
        WriteJson(out / "masks.json", report);
        Fail(ErrorKind::kData, "mask cache reload hash mismatch");
      }
      std::printf("cache reload verified (hash %s)\n", Hex64(reloaded).c_str());
    }
  }
  const MaskStatistics stats = ComputeMaskStatistics(generator);
  report["global_mean"] = stats.global_mean;
  report["min"] = stats.min;
  report["max"] = stats.max;
  const auto [lo, hi] = std::minmax_element(stats.mean_map.data().begin(), stats.mean_map.data().end());
  report["pixel_mean_min"] = *lo;
  report["pixel_mean_max"] = *hi;
  WriteJson(out / "masks.json", report);
  std::printf("global mean %.6f, min %.6f, max %.6f, per-pixel mean in [%.6f, %.6f]\n",
              stats.global_mean, stats.min, stats.max, *lo, *hi);
  return kExitOk;
}

}  // namespace

int Run(int argc, char** argv) {
  Options o;
  CLI::App app{"risekit: black-box saliency by randomized input masking"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* explain = app.add_subcommand("explain", "Compute saliency maps, heatmaps and RSAL dumps");
  AddCommon(explain, o, true);
  explain->add_option("--alpha", o.alpha, "Heatmap overlay opacity");

  auto* evaluate = app.add_subcommand("evaluate", "Deletion / insertion curves and AUCs");
  AddCommon(evaluate, o, true);
  AddMetricOptions(evaluate, o);
  evaluate->add_option("--method", o.method, "rise | random | sliding | flat | rsal");
  evaluate->add_option("--saliency-dir", o.saliency_dir, "Directory of <stem>.rsal dumps");
  evaluate->add_option("--window", o.window, "Sliding-window size");
  evaluate->add_option("--stride", o.stride, "Sliding-window stride");

  auto* point = app.add_subcommand("point", "Pointing game against JSONL bounding boxes");
  AddCommon(point, o, true);
  point->add_option("--boxes", o.boxes, "JSONL bounding boxes")->required()->check(CLI::ExistingFile);
  point->add_option("--category-map", o.category_map, "JSON object: category -> class index");

  auto* masks = app.add_subcommand("masks", "Generate a mask cache and report statistics");
  AddCommon(masks, o, false);
  masks->add_flag("--verify", o.verify, "Reload the cache and compare hashes");
  masks->add_flag("--stats-only", o.stats_only, "Skip writing the cache file");

  try {
    auto args = ExpandConfig(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  } catch (const Error& e) {
    Log(e.what());
    return ExitCodeFor(e.kind());
  }

  try {
    if (*explain) return CmdExplain(o);
    if (*evaluate) return CmdEvaluate(o);
    if (*point) return CmdPoint(o);
    return CmdMasks(o);
  } catch (const Error& e) {
    Log(std::string(ErrorKindName(e.kind())) + " error: " + e.what());
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    Log(e.what());
    return kExitData;
  }
}

}  // namespace risekit::cli
