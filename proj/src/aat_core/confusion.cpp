#include "aat/confusion.hpp"

#include <cmath>
#include <numeric>

#include "aat/errors.hpp"

namespace aat {

ConfusionMatrix::ConfusionMatrix(int num_classes, double momentum)
    : n_(num_classes), momentum_(momentum), counts_(static_cast<std::size_t>(std::max(num_classes, 0)), 0) {
  if (num_classes < 1) throw ContractError("ConfusionMatrix: need at least one class");
  if (!(momentum >= 0 && momentum < 1)) throw ContractError("ConfusionMatrix: momentum must be in [0,1)");
  m_.assign(static_cast<std::size_t>(n_ * n_), 0.0);
  for (int i = 0; i < n_; ++i) m_[static_cast<std::size_t>(i * n_ + i)] = 1.0;
}

void ConfusionMatrix::set_row(int i, const std::vector<double>& row) {
  if (i < 0 || i >= n_ || static_cast<int>(row.size()) != n_) throw ContractError("ConfusionMatrix::set_row: bad row");
  std::copy(row.begin(), row.end(), m_.begin() + i * n_);
}

std::vector<double> ConfusionMatrix::row(int i) const {
  if (i < 0 || i >= n_) throw ContractError("ConfusionMatrix::row: class out of range");
  return {m_.begin() + i * n_, m_.begin() + (i + 1) * n_};
}

void ConfusionMatrix::update(int true_class, const std::vector<double>& q) {
  if (true_class < 0 || true_class >= n_) throw ContractError("ConfusionMatrix::update: class out of range");
  if (static_cast<int>(q.size()) != n_) throw ContractError("ConfusionMatrix::update: probability vector size");
  double sum = 0;
  for (double v : q) {
    if (!(v >= 0 && v <= 1)) throw ContractError("ConfusionMatrix::update: probabilities must lie in [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1) > 1e-6) throw ContractError("ConfusionMatrix::update: probabilities must sum to 1");
  double* r = m_.data() + true_class * n_;
  for (int j = 0; j < n_; ++j) r[j] = momentum_ * r[j] + (1 - momentum_) * (q[j] / sum);
  ++counts_[static_cast<std::size_t>(true_class)];
}

double ConfusionMatrix::mean_diagonal() const {
  double s = 0;
  for (int i = 0; i < n_; ++i) s += at(i, i);
  return s / n_;
}

bool less_dominant(int i, int j, const ConfusionMatrix& m) { return m.at(i, j) >= m.at(j, i); }

bool is_minority(int c, const ConfusionMatrix& m) { return m.at(c, c) < m.mean_diagonal(); }

std::vector<int> minority_classes(const ConfusionMatrix& m) {
  std::vector<int> out;
  for (int c = 0; c < m.num_classes(); ++c)
    if (is_minority(c, m)) out.push_back(c);
  return out;
}

template <typename T>
int update_confusion_matrix(ConfusionMatrix& m, const RawOutputs<T>& outputs,
                            const std::vector<GridAssignment>& assignments) {
  if (assignments.size() != outputs.batch()) throw ContractError("update_confusion_matrix: batch size mismatch");
  const int classes = m.num_classes();
  if (static_cast<int>(outputs.logits.dim(1)) != classes + 1) {
    throw ShapeError("update_confusion_matrix: logits do not match the class count");
  }
  int observed = 0;
  for (std::size_t n = 0; n < assignments.size(); ++n) {
    const GridAssignment& a = assignments[n];
    for (int r = 0; r < a.grid; ++r) {
      for (int c = 0; c < a.grid; ++c) {
        const int t = a.target_class[a.cell(r, c)];
        if (t == a.background) continue;
        std::vector<double> p = cell_probabilities(outputs.logits, n, r, c);
        p.pop_back();
        const double fg = std::accumulate(p.begin(), p.end(), 0.0);
        if (!(fg > 0)) continue;
        for (double& v : p) v /= fg;
        m.update(t, p);
        ++observed;
      }
    }
  }
  return observed;
}

template int update_confusion_matrix<float>(ConfusionMatrix&, const RawOutputs<float>&,
                                            const std::vector<GridAssignment>&);
template int update_confusion_matrix<double>(ConfusionMatrix&, const RawOutputs<double>&,
                                             const std::vector<GridAssignment>&);

}  // namespace aat
