#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "risekit/baselines.hpp"
#include "risekit/error.hpp"
#include "risekit/image_io.hpp"
#include "risekit/masking.hpp"
#include "risekit/metrics.hpp"
#include "risekit/saliency.hpp"
#include "risekit/synthetic.hpp"
#include "risekit/transport.hpp"

namespace py = pybind11;
using namespace risekit;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Image ToImage(const FloatArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) {
    throw py::value_error("image must have shape (H, W, 3)");
  }
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  return Image(h, w, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> FromImage(const Image& im) {
  py::array_t<float> out({im.height(), im.width(), 3});
  std::copy(im.data().begin(), im.data().end(), out.mutable_data());
  return out;
}

template <class Tag>
Plane<Tag> ToPlane(const FloatArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  return Plane<Tag>(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                    std::vector<float>(a.data(), a.data() + a.size()));
}

template <class Tag>
py::array_t<float> FromPlane(const Plane<Tag>& p) {
  py::array_t<float> out({p.height(), p.width()});
  std::copy(p.data().begin(), p.data().end(), out.mutable_data());
  return out;
}

// Wraps a Python callable f(batch: ndarray[B,H,W,3], target: str) -> sequence
// of floats.
class CallableScorer final : public Scorer {
 public:
  CallableScorer(py::function fn, int max_batch) : fn_(std::move(fn)), max_batch_(max_batch) {}

  std::vector<double> ScoreBatch(std::span<const Image> images, const Target& target) override {
    py::gil_scoped_acquire gil;
    const Image& first = images.front();
    py::array_t<float> batch({static_cast<py::ssize_t>(images.size()),
                              static_cast<py::ssize_t>(first.height()),
                              static_cast<py::ssize_t>(first.width()), py::ssize_t{3}});
    float* dst = batch.mutable_data();
    for (const Image& im : images) dst = std::copy(im.data().begin(), im.data().end(), dst);
    return fn_(batch, target.ToString()).cast<std::vector<double>>();
  }
  int max_batch() const override { return max_batch_; }
  std::string name() const override { return "python"; }

 private:
  py::function fn_;
  int max_batch_;
};

// Accepts a scorer spec string ("synthetic:...", "subprocess:...", "http:...")
// or a Python callable.
std::shared_ptr<Scorer> ResolveScorer(const py::object& scorer, int max_batch) {
  if (py::isinstance<py::str>(scorer)) return MakeScorer(scorer.cast<std::string>(), max_batch);
  if (PyCallable_Check(scorer.ptr())) {
    return std::make_shared<CallableScorer>(scorer.cast<py::function>(), max_batch);
  }
  throw py::type_error("scorer must be a spec string or a callable");
}

MaskConfig MakeConfig(int height, int width, int num_masks, std::pair<int, int> grid,
                      double prob, std::uint64_t seed, bool random_shift) {
  MaskConfig c;
  c.image_h = height;
  c.image_w = width;
  c.num_masks = num_masks;
  c.grid_h = grid.first;
  c.grid_w = grid.second;
  c.prob_on = prob;
  c.seed = seed;
  c.random_shift = random_shift;
  c.Validate();
  return c;
}

py::dict CurveToDict(const MetricCurve& curve) {
  std::vector<double> fractions, scores;
  for (const auto& p : curve.points) {
    fractions.push_back(p.fraction);
    scores.push_back(p.score);
  }
  py::dict d;
  d["fractions"] = fractions;
  d["scores"] = scores;
  d["auc"] = curve.auc;
  return d;
}

}  // namespace

PYBIND11_MODULE(_risekit, m) {
  m.doc() = "Randomized input sampling saliency: masks, estimators and causal metrics";

  static py::exception<Error> error(m, "RisekitError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(ErrorKindName(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def(
      "explain",
      [](const FloatArray& image, const py::object& scorer, int num_masks,
         std::pair<int, int> grid, double prob, std::uint64_t seed, const std::string& target,
         const std::string& normalization, bool random_shift, int batch_size) {
        const Image im = ToImage(image);
        auto s = ResolveScorer(scorer, batch_size);
        ExplainRequest req{im, Target::Parse(target),
                           MakeConfig(im.height(), im.width(), num_masks, grid, prob, seed,
                                      random_shift),
                           ParseNormalization(normalization)};
        ExplainOptions opts;
        opts.batch_size = batch_size;
        const ExplainResult r = RiseSaliency(req, *s, opts);
        py::dict d;
        d["saliency"] = FromPlane(r.saliency);
        d["score_unmasked"] = r.score_unmasked;
        d["num_probes"] = r.num_probes;
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("image"), py::arg("scorer"), py::arg("num_masks") = 4000,
      py::arg("grid") = std::pair{7, 7}, py::arg("prob") = 0.5, py::arg("seed") = 0,
      py::arg("target") = "0", py::arg("normalization") = "analytic",
      py::arg("random_shift") = true, py::arg("batch_size") = 32,
      "RISE saliency map for one image. Returns a dict with 'saliency' (H, W).");

  m.def(
      "exact_saliency",
      [](const FloatArray& image, const py::object& scorer, std::pair<int, int> grid,
         double prob, const std::string& target) {
        auto s = ResolveScorer(scorer, 32);
        return FromPlane(
            ExactSaliency(ToImage(image), grid.first, grid.second, prob, *s, Target::Parse(target)));
      },
      py::arg("image"), py::arg("scorer"), py::arg("grid") = std::pair{2, 2},
      py::arg("prob") = 0.5, py::arg("target") = "0",
      "Exact expectation over every binary grid (small grids only).");

  m.def(
      "generate_masks",
      [](int height, int width, int num_masks, std::pair<int, int> grid, double prob,
         std::uint64_t seed) {
        const MaskGenerator gen(MakeConfig(height, width, num_masks, grid, prob, seed, true));
        py::array_t<float> out({num_masks, height, width});
        float* dst = out.mutable_data();
        for (int i = 0; i < num_masks; ++i) {
          const Mask mask = gen.Generate(i);
          dst = std::copy(mask.data().begin(), mask.data().end(), dst);
        }
        return out;
      },
      py::arg("height"), py::arg("width"), py::arg("num_masks"),
      py::arg("grid") = std::pair{7, 7}, py::arg("prob") = 0.5, py::arg("seed") = 0);

  m.def(
      "deletion",
      [](const FloatArray& image, const FloatArray& saliency, const py::object& scorer,
         const std::string& target, int pixels_per_step) {
        auto s = ResolveScorer(scorer, 32);
        DeletionOptions o;
        o.pixels_per_step = pixels_per_step;
        return CurveToDict(Deletion(ToImage(image), ToPlane<SaliencyTag>(saliency), *s,
                                    Target::Parse(target), o));
      },
      py::arg("image"), py::arg("saliency"), py::arg("scorer"), py::arg("target") = "0",
      py::arg("pixels_per_step") = 0);

  m.def(
      "insertion",
      [](const FloatArray& image, const FloatArray& saliency, const py::object& scorer,
         const std::string& target, int pixels_per_step, int blur_kernel, double blur_sigma) {
        auto s = ResolveScorer(scorer, 32);
        InsertionOptions o;
        o.pixels_per_step = pixels_per_step;
        o.blur_kernel = blur_kernel;
        o.blur_sigma = blur_sigma;
        return CurveToDict(Insertion(ToImage(image), ToPlane<SaliencyTag>(saliency), *s,
                                     Target::Parse(target), o));
      },
      py::arg("image"), py::arg("saliency"), py::arg("scorer"), py::arg("target") = "0",
      py::arg("pixels_per_step") = 0, py::arg("blur_kernel") = 11, py::arg("blur_sigma") = 5.0);

  m.def(
      "auc",
      [](const std::vector<std::pair<double, double>>& points) {
        std::vector<CurvePoint> pts;
        for (auto [x, y] : points) pts.push_back({x, y});
        return Auc(pts);
      },
      py::arg("points"), "Trapezoidal area under [(fraction, score), ...].");

  m.def(
      "pointing_game",
      [](const FloatArray& saliency, const std::vector<std::array<int, 4>>& boxes) {
        std::vector<BoundingBox> bs;
        for (const auto& b : boxes) bs.push_back({b[0], b[1], b[2], b[3], ""});
        return PointingGame(ToPlane<SaliencyTag>(saliency), bs);
      },
      py::arg("saliency"), py::arg("boxes"),
      "True if the saliency argmax falls in any (x_min, y_min, x_max, y_max) box.");

  m.def(
      "sliding_window",
      [](const FloatArray& image, const py::object& scorer, int window, int stride,
         const std::string& target) {
        auto s = ResolveScorer(scorer, 32);
        return FromPlane(SlidingWindowSaliency(ToImage(image), *s, Target::Parse(target),
                                               {window, stride, 0.0f}));
      },
      py::arg("image"), py::arg("scorer"), py::arg("window") = 64, py::arg("stride") = 8,
      py::arg("target") = "0");

  m.def(
      "gaussian_blur",
      [](const FloatArray& image, int kernel, double sigma) {
        return FromImage(GaussianBlur(ToImage(image), kernel, sigma));
      },
      py::arg("image"), py::arg("kernel") = 11, py::arg("sigma") = 5.0);

  m.def(
      "load_image",
      [](const std::filesystem::path& path, std::optional<std::pair<int, int>> size) {
        std::optional<ImageSize> s;
        if (size) s = ImageSize{size->first, size->second};
        return FromImage(LoadImage(path, s));
      },
      py::arg("path"), py::arg("size") = py::none());

  m.def(
      "write_rsal",
      [](const FloatArray& saliency, const std::filesystem::path& path) {
        WriteRsal(ToPlane<SaliencyTag>(saliency), path);
      },
      py::arg("saliency"), py::arg("path"));
  m.def(
      "read_rsal", [](const std::filesystem::path& path) { return FromPlane(ReadRsal(path)); },
      py::arg("path"));
}
