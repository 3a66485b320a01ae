#include "aat/attack.hpp"

#include <algorithm>
#include <cmath>

#include "aat/errors.hpp"
#include "aat/log.hpp"
#include "aat/ops.hpp"

namespace aat {

std::vector<float> AdversarialExample::perturbation(const Image& original) const {
  if (original.pixels.size() != image.pixels.size()) throw ShapeError("perturbation: image size mismatch");
  std::vector<float> out(image.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = image.pixels[i] - original.pixels[i];
  return out;
}

template <typename T>
std::vector<AdversarialExample> fgsm_attack(const GridDetector<T>& teacher, const ParameterSet<T>& params,
                                            const std::vector<const Image*>& images,
                                            const std::vector<Detections>& vanilla, double beta) {
  if (images.size() != vanilla.size()) throw ContractError("fgsm_attack: one pseudo-label set per image required");
  if (!(beta >= 0) || !std::isfinite(beta)) throw ContractError("fgsm_attack: beta must be finite and >= 0");
  const GridGeometry geometry = teacher.geometry();
  const int classes = teacher.config().num_classes;
  const std::size_t cells = static_cast<std::size_t>(geometry.cells());

  std::vector<AdversarialExample> out(images.size());
  std::vector<int> targets;
  std::vector<T> weights;
  int attacked = 0;
  for (std::size_t n = 0; n < images.size(); ++n) {
    out[n].image = *images[n];
    out[n].step.assign(images[n]->pixels.size(), 0.0f);
    out[n].beta = beta;
    const GridAssignment a = assign_targets(vanilla[n], geometry, classes);
    out[n].attacked_cells.assign(cells, 0);
    for (std::size_t c = 0; c < cells; ++c) {
      const bool fg = a.target_class[c] != a.background;
      out[n].attacked_cells[c] = fg;
      targets.push_back(a.target_class[c]);
      weights.push_back(fg ? T(1) : T(0));
      attacked += fg;
    }
  }
  if (attacked == 0 || beta == 0) return out;

  Tape<T> tape;
  const auto bound = params.bind(tape, false);
  Var<T> x = tape.leaf(images_to_tensor<T>(images), true, "attack_input");
  const DetectorVars<T> vars = teacher.forward(bound, x);
  Var<T> loss = ops::softmax_cross_entropy(ops::to_rows(vars.logits), targets, weights, T(1));
  tape.backward(loss);
  const Tensor<T>& grad = tape.grad(x);

  const std::size_t h = x.shape()[2], w = x.shape()[3];
  for (std::size_t n = 0; n < images.size(); ++n) {
    AdversarialExample& ex = out[n];
    if (std::none_of(ex.attacked_cells.begin(), ex.attacked_cells.end(), [](auto v) { return v != 0; })) continue;
    const T* g = grad.data().data() + n * 3 * h * w;
    if (!std::all_of(g, g + 3 * h * w, [](T v) { return std::isfinite(static_cast<double>(v)); })) {
      ex.skipped = true;
      log::warn("fgsm_attack: non-finite input gradient, image " + std::to_string(n) + " left unattacked");
      continue;
    }
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t xx = 0; xx < w; ++xx) {
        for (std::size_t c = 0; c < 3; ++c) {
          const std::size_t hwc = (y * w + xx) * 3 + c;
          const float s = static_cast<float>(beta * sign_of(static_cast<double>(g[(c * h + y) * w + xx])));
          ex.step[hwc] = s;
          ex.image.pixels[hwc] = std::clamp(images[n]->pixels[hwc] + s, 0.0f, 1.0f);
        }
      }
    }
  }
  return out;
}

template <typename T>
double attack_loss(const GridDetector<T>& teacher, const ParameterSet<T>& params, const Image& image,
                   const Detections& vanilla) {
  const GridGeometry geometry = teacher.geometry();
  const GridAssignment a = assign_targets(vanilla, geometry, teacher.config().num_classes);
  const RawOutputs<T> raw = teacher.predict(params, image);
  double loss = 0;
  for (int r = 0; r < a.grid; ++r) {
    for (int c = 0; c < a.grid; ++c) {
      const int t = a.target_class[a.cell(r, c)];
      if (t == a.background) continue;
      const std::vector<double> p = cell_probabilities(raw.logits, 0, r, c);
      loss -= std::log(std::max(p[t], 1e-300));
    }
  }
  return loss;
}

template std::vector<AdversarialExample> fgsm_attack<float>(const GridDetector<float>&, const ParameterSet<float>&,
                                                            const std::vector<const Image*>&,
                                                            const std::vector<Detections>&, double);
template std::vector<AdversarialExample> fgsm_attack<double>(const GridDetector<double>&,
                                                             const ParameterSet<double>&,
                                                             const std::vector<const Image*>&,
                                                             const std::vector<Detections>&, double);
template double attack_loss<float>(const GridDetector<float>&, const ParameterSet<float>&, const Image&,
                                   const Detections&);
template double attack_loss<double>(const GridDetector<double>&, const ParameterSet<double>&, const Image&,
                                    const Detections&);

}  // namespace aat
