#pragma once

#include <vector>

#include "aat/detector.hpp"

namespace aat {

// Exponential average of per-class prediction distributions on the source
// domain. Row i is the mean foreground probability vector of class-i objects.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes = 1, double momentum = 0.99);

  int num_classes() const { return n_; }
  double momentum() const { return momentum_; }
  double at(int i, int j) const { return m_[static_cast<std::size_t>(i * n_ + j)]; }
  void set_row(int i, const std::vector<double>& row);
  std::vector<double> row(int i) const;
  const std::vector<double>& values() const { return m_; }
  long observations(int i) const { return counts_[static_cast<std::size_t>(i)]; }

  // M[i] <- m M[i] + (1 - m) q for one instance of true class i. q must be a
  // probability vector over the foreground classes.
  void update(int true_class, const std::vector<double>& q);

  double mean_diagonal() const;

 private:
  int n_;
  double momentum_;
  std::vector<double> m_;
  std::vector<long> counts_;
};

// True when i is the less dominant class of the pair: M[i][j] >= M[j][i].
bool less_dominant(int i, int j, const ConfusionMatrix& m);

// M[c][c] < mean of the diagonal.
bool is_minority(int c, const ConfusionMatrix& m);

std::vector<int> minority_classes(const ConfusionMatrix& m);

// Foreground probabilities at the cells assigned to ground-truth objects,
// renormalized after dropping the background column, fed to update().
// Returns the number of instances observed.
template <typename T>
int update_confusion_matrix(ConfusionMatrix& m, const RawOutputs<T>& outputs,
                            const std::vector<GridAssignment>& assignments);

}  // namespace aat
