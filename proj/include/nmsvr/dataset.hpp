#pragma once

// Tomography-feature datasets.
//
// A row holds the Pauli expectations of the channel output for the |+> input
// at one or two fixed times, the non-Markovianity target, and the channel
// parameters it was generated from. Tables serialize to CSV with a `#meta`
// line ahead of the header.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nmsvr/channels.hpp"
#include "nmsvr/measures.hpp"

namespace nmsvr {

inline constexpr const char* kFormatVersion = "1";

enum class ChannelKind { PhaseDamping, AmplitudeDamping, DrivenAmplitudeDamping };

std::string to_string(ChannelKind kind);          // pd, ad, driven
ChannelKind parse_channel_kind(const std::string& s);
ChannelKind kind_of(const ChannelSpec& spec);

/// value_i = start + i * step, i = 0..count-1.
struct ParamGrid {
  double start = 0.1;
  double step = 1e-3;
  std::size_t count = 1;

  double operator[](std::size_t i) const { return start + static_cast<double>(i) * step; }
  std::vector<double> values() const;
  std::string to_string() const;  // start:step:count
  static ParamGrid parse(const std::string& s);
  bool operator==(const ParamGrid&) const = default;
};

ParamGrid default_grid_pure_ad();      // lambda 0.1, 1e-3, 2900
ParamGrid default_grid_pure_pd();      // tau 0.1, 1e-4, 4000
ParamGrid default_grid_driven_ad();    // lambda 0.1, 1e-2, 290
/// 0.01..0.20 step 0.01, then 0.3, 0.4, 0.5.
std::vector<double> default_omegas();

struct Sample {
  std::vector<double> features;  // [ox, oy, oz] per time
  double target = 0.0;
  double param = 0.0;  // tau (pd) or lambda (ad, driven)
  double omega = 0.0;
};

struct Schema {
  ChannelKind channel = ChannelKind::AmplitudeDamping;
  MeasureKind measure = MeasureKind::Entanglement;
  std::vector<double> times;

  std::size_t n_features() const { return 3 * times.size(); }
  std::vector<std::string> feature_names() const;
  std::string param_name() const;  // param_tau or param_lambda
  std::vector<std::string> header() const;
  bool operator==(const Schema&) const = default;
};

class DataTable {
 public:
  DataTable() = default;
  explicit DataTable(Schema schema);

  const Schema& schema() const noexcept { return schema_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_.at(i); }

  /// Throws DimensionError on a feature-length mismatch, InvariantViolation on
  /// non-finite values or a negative target.
  void add(Sample s);
  void reserve(std::size_t n) { samples_.reserve(n); }

  std::vector<double> targets() const;
  std::vector<std::vector<double>> features() const;

  // Free-form provenance, written to the #meta line after the schema keys.
  std::map<std::string, std::string> meta;

 private:
  Schema schema_;
  std::vector<Sample> samples_;
};

/// Bloch components of the output of the channel for the |+> input, each time
/// in the order given. PD times are dimensionless nu.
std::vector<double> features_at(const ChannelSpec& spec, std::span<const double> times,
                                const IntegratorOptions& integrator = {});

/// [<sx>, <sy>, <sz>] of a qubit state.
std::vector<double> bloch_vector(const DensityMatrix& rho);

/// Output of the channel for the |+> input, read off the ancilla-qubit state
/// obtained from |Phi+>: sum over the ancilla indices a, a' of the (a, a') block.
DensityMatrix plus_response_from_choi(const DensityMatrix& rho_ab);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

struct GenerateOptions {
  std::optional<ParamGrid> grid;  // channel default when empty
  MeasureOptions measure;
  std::size_t threads = 0;        // 0 = default_thread_count()
  ProgressFn progress;
};

struct DrivenOptions : GenerateOptions {
  std::vector<double> omegas = default_omegas();
  // Truncations tried in order when the top Fock level leaks.
  std::vector<std::size_t> fock_ladder = {8, 12, 16};
};

DataTable generate_pure_ad(MeasureKind measure, std::vector<double> times = {3.0},
                           const GenerateOptions& options = {});
DataTable generate_pure_pd(MeasureKind measure, std::vector<double> times = {3.0},
                           const GenerateOptions& options = {});
/// N_E targets; rows ordered by omega, then lambda.
DataTable generate_driven_ad(std::vector<double> times, const DrivenOptions& options = {});
/// One table per time set, all from the same trajectories.
std::vector<DataTable> generate_driven_ad(const std::vector<std::vector<double>>& time_sets,
                                          const DrivenOptions& options = {});

// ---------------------------------------------------------------------------
// Standardization

enum class ZeroVariancePolicy {
  Reject,     // throw on a constant column
  UnitScale,  // keep s = 1 for a constant column (centering only)
};

struct Scaler {
  std::vector<double> mean;
  std::vector<double> scale;  // population standard deviation

  std::size_t size() const noexcept { return mean.size(); }
  std::vector<double> transform(std::span<const double> x) const;
  void transform_in_place(std::span<double> x) const;
  static Scaler identity(std::size_t n);
  bool operator==(const Scaler&) const = default;
};

Scaler scaler_fit(const DataTable& table, ZeroVariancePolicy policy = ZeroVariancePolicy::Reject);
Scaler scaler_fit(const std::vector<std::vector<double>>& rows,
                  ZeroVariancePolicy policy = ZeroVariancePolicy::Reject);
DataTable scaler_apply(const Scaler& scaler, const DataTable& table);

void write_scaler(std::ostream& os, const Scaler& scaler);
Scaler read_scaler(std::istream& is);
void save_scaler(const Scaler& scaler, const std::string& path);
Scaler load_scaler(const std::string& path);

// ---------------------------------------------------------------------------
// Split

/// Uniform integer in [0, n) from a 64-bit engine, independent of the
/// standard library's distribution implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// First ceil(fraction * n) rows of the seeded permutation form the training
/// part. Both parts keep the table's row order.
std::pair<DataTable, DataTable> split(const DataTable& table, double train_fraction,
                                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// CSV

/// 17 significant digits.
std::string format_double(double v);

void write_csv(std::ostream& os, const DataTable& table);
DataTable read_csv(std::istream& is);
void save_csv(const DataTable& table, const std::string& path);
DataTable load_csv(const std::string& path);

}  // namespace nmsvr
