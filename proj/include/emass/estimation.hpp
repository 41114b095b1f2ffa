#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emass/dataset.hpp"
#include "emass/model.hpp"
#include "emass/simulate.hpp"

namespace emass {

enum class ParamStatus { Free, Fixed, Tied };

struct ParamEntry {
  ParamStatus status = ParamStatus::Fixed;
  /// Fixed value; for free and tied entries the starting value.
  double value = 0.0;
  std::string group;  // tied entries only
};

/// Estimable matrices of a model.
enum class ParamMatrix { A, G, H, Sigma, Theta };

/// Status of every entry of A, G, H, Sigma and Theta. Entries of Sigma and
/// Theta describe the lower-triangular factor L of the covariance
/// (cov = L L'); a free diagonal entry of L is stored on the log scale, so
/// any parameter vector yields a PSD covariance. Upper-triangle entries of
/// the covariance statuses are ignored.
class ParameterMap {
 public:
  ParameterMap() = default;
  /// Every entry fixed at the template value (the factor of the template's
  /// covariances for Sigma and Theta).
  explicit ParameterMap(const ModelSpec& spec);

  ParamEntry& at(ParamMatrix which, Eigen::Index row, Eigen::Index col);
  const ParamEntry& at(ParamMatrix which, Eigen::Index row, Eigen::Index col) const;
  void set_free(ParamMatrix which, Eigen::Index row, Eigen::Index col);
  void set_fixed(ParamMatrix which, Eigen::Index row, Eigen::Index col, double value);
  void set_tied(ParamMatrix which, Eigen::Index row, Eigen::Index col, const std::string& group);
  /// Frees every entry of a matrix (the lower triangle for covariances).
  void free_all(ParamMatrix which);

  /// Pins random-walk rows of A and marks them fixed: unit rows in
  /// discrete time, zero drift rows in continuous time.
  void apply_random_walk(const std::set<int>& states, TimeMode mode);

  /// Number of underlying free values: free entries plus tie groups.
  int n_free() const;
  /// Starting vector from the stored entry values.
  Eigen::VectorXd initial_vector() const;
  /// Model with every free and tied entry replaced from theta.
  ModelSpec apply(const ModelSpec& base, const Eigen::VectorXd& theta) const;
  /// Inverse of apply for the free part: reads the current values of spec.
  Eigen::VectorXd extract(const ModelSpec& spec) const;

  Eigen::Index rows(ParamMatrix which) const;
  Eigen::Index cols(ParamMatrix which) const;

 private:
  struct Slot {
    ParamMatrix which;
    Eigen::Index row;
    Eigen::Index col;
  };
  void reindex();
  std::map<ParamMatrix, std::vector<std::vector<ParamEntry>>> entries_;
  /// Entries behind each position of the free vector.
  std::vector<std::vector<Slot>> slots_;
};

/// A fit candidate: model shape, estimable entries and the disturbance
/// coding that fills its input columns (empty keeps the data's inputs).
struct ModelTemplate {
  std::string id;
  ModelSpec spec;
  ParameterMap params;
  std::vector<DisturbanceEvent> disturbances;
};

enum class FitMode { Idiographic, Pooled };
enum class LikelihoodKind { Kalman, Particle };

struct FitOptions {
  int n_restarts = 5;
  int max_iter = 200;
  double tol = 1e-4;
  LikelihoodKind likelihood = LikelihoodKind::Kalman;
  int n_particles = 1000;
  /// Drives restart perturbations and the particle streams.
  std::uint64_t seed = 0;
  /// Worker threads for restarts and idiographic fits; 0 uses every core.
  /// Results do not depend on it.
  int threads = 0;
};

struct FitResult {
  std::string participant;  // empty for pooled fits
  ModelSpec spec_hat;
  double log_likelihood = 0.0;
  int n_free = 0;
  long n_obs_used = 0;
  double aic = 0.0;
  double bic = 0.0;
  bool converged = false;
  int n_restarts_used = 0;
  std::vector<double> restart_log_likelihoods;  // final value per start
  std::vector<double> start_log_likelihoods;    // value at each start
  double gradient_norm = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
};

struct InformationCriteria {
  double aic;
  double bic;
};

/// aic = 2k - 2 ll, bic = k ln(n) - 2 ll.
InformationCriteria information_criteria(double log_likelihood, int k, long n_obs_used);

/// Input columns targeted by the events replaced by their coding. The data
/// is padded with zero columns up to n_inputs first.
EmaDataset apply_disturbances(const EmaDataset& data, const std::vector<DisturbanceEvent>& events,
                              int n_inputs);

/// Summed log-likelihood of the data under spec; the filter restarts from
/// the initial state at each participant.
double log_likelihood(const ModelSpec& spec, const EmaDataset& data, const FitOptions& options);

/// Maximum-likelihood fit. Pooled mode returns one result; idiographic mode
/// returns one per participant.
std::vector<FitResult> fit(const ModelTemplate& model, const EmaDataset& data, FitMode mode,
                           const FitOptions& options);

/// The template evaluated as is: no optimization, k = 0.
FitResult evaluate(const ModelTemplate& model, const EmaDataset& data, const FitOptions& options);

struct ComparisonRow {
  std::string model_id;
  int k = 0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  int rank_aic = 0;
  int rank_bic = 0;
  bool converged = false;
  FitResult fit;
};

/// Ranks already-fitted rows by AIC and BIC. Ties go to fewer parameters,
/// then to the earlier row.
void rank_rows(std::vector<ComparisonRow>& rows);

/// Pooled fits of several templates on the same data, ranked.
std::vector<ComparisonRow> compare_models(const std::vector<ModelTemplate>& templates,
                                          const EmaDataset& data, const FitOptions& options);

struct DisturbanceCandidate {
  std::string id;
  std::vector<DisturbanceEvent> events;
};

/// One pooled fit per disturbance coding, everything else shared.
std::vector<ComparisonRow> compare_disturbance_codings(
    const ModelTemplate& base, const EmaDataset& data,
    const std::vector<DisturbanceCandidate>& candidates, const FitOptions& options);

/// Columns model_id,k,loglik,aic,bic,rank_aic,rank_bic,converged.
void write_comparison_table(const std::vector<ComparisonRow>& rows, std::ostream& out);

/// Splits every participant at the breakpoints into separate series
/// ("<id>#<segment>") so a pooled fit treats each regime segment as its own
/// run of the shared model.
EmaDataset split_at_breakpoints(const EmaDataset& data, const std::vector<double>& breakpoints);

}  // namespace emass
