#pragma once

// Shear-speed estimation from recorded wavefields, and the residual test that
// asks whether one displacement field can satisfy the equations of two
// different materials.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "visco/solver.hpp"

namespace visco {

enum class SpeedMethod { TimeOfFlight, PhaseGradient };
std::string to_string(SpeedMethod m);
/// "time_of_flight" or "phase_gradient"; throws std::invalid_argument otherwise.
SpeedMethod speed_method_from_string(const std::string& s);

/// Field the estimators track. The curl of u removes the curl-free pressure
/// wave, leaving the shear wave.
enum class SpeedSignal { Curl, Displacement };
std::string to_string(SpeedSignal s);
SpeedSignal speed_signal_from_string(const std::string& s);

struct SpeedOptions {
  SpeedMethod method = SpeedMethod::TimeOfFlight;
  SpeedSignal signal = SpeedSignal::Curl;
  /// Bounding box of the source footprint. The ray to a node starts at the
  /// footprint point nearest to it, so a wide footprint sends rays normal to
  /// the face in front of it and radial rays beside it.
  std::array<double, 3> footprint_lo{0.0, 0.0, 0.0}, footprint_hi{0.0, 0.0, 0.0};
  /// Drive frequency in Hz. Required by phase_gradient; when set, the record must span one period.
  double frequency = 0.0;
  /// Distance along the ray between the two compared points; 0 means 10 h.
  double baseline = 0.0;
  /// Largest lag searched, in seconds; 0 means half the record.
  double max_lag = 0.0;
  /// Length in seconds of the reference window, opened where the reference
  /// first reaches 20% of its peak; 0 uses the whole record.
  double gate = 0.0;
  /// Nodes whose peak amplitude is below this fraction of the maximum are masked.
  double amplitude_floor = 0.05;

  friend bool operator==(const SpeedOptions&, const SpeedOptions&) = default;
};

/// Footprint box of a drive: the face patch within half_width of its centre.
void set_footprint(SpeedOptions& opt, const SourceSpec& src, const Grid& g);

struct SpeedMap {
  Grid grid;
  Field speed;                      ///< m/s; NaN where mask is 0
  std::vector<unsigned char> mask;  ///< 1 where the signal sufficed for an estimate

  std::size_t count() const;
  /// Median over masked nodes accepted by `where` (all masked nodes when empty). NaN if none.
  double median(const std::function<bool(const std::array<double, 3>&)>& where = {}) const;
  /// Fraction of masked nodes accepted by `where` whose estimate is within rel of truth.
  double fraction_within(double truth, double rel,
                         const std::function<bool(const std::array<double, 3>&)>& where = {}) const;
};

/// Requires at least 10 evenly spaced snapshots. Throws std::invalid_argument on
/// bad input and std::runtime_error when the recorded field is identically zero.
SpeedMap estimate_speed(const Grid& g, const std::vector<Snapshot>& snaps, const SpeedOptions& opt);

/// Snapshots are so far apart that the self-residual of the true material is
/// not small against the inertia term.
class CoarseSnapshotError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Streams a displacement history and accumulates, per node, the time-RMS of
/// rho_B u_tt - div sigma_B[u, phi_B], with the dashpot strains phi_B rebuilt
/// from the strain history under material B. u_tt is the centred second
/// difference, so every pushed level except the first and last is evaluated.
/// Dirichlet nodes are not evaluated.
class ResidualAccumulator {
public:
  ResidualAccumulator(const MaterialField& b, const BoundarySpec& bc, int order = 2);

  /// Levels start at t = 0 (zero history) and are evenly spaced.
  void push(double t, const MultiField& u);

  int evaluations() const { return evals_; }
  Field rms() const;
  /// Time-RMS of |rho_B u_tt|, the scale the residual is compared against.
  Field inertia_rms() const;
  const std::vector<unsigned char>& evaluated() const { return evaluated_; }

private:
  void stress_divergence(MultiField& out);

  MaterialField mf_;
  GridOps ops_;
  std::array<bool, 6> weak_{};
  std::vector<unsigned char> evaluated_;
  std::vector<std::array<Field, 3>> wv_, wd_;
  int dim_;
  int pushed_ = 0;
  int evals_ = 0;
  double t_last_ = 0.0, spacing_ = 0.0;
  MultiField u_prev_, u_cur_, e_cur_, e_next_, sigma_, div_;
  std::vector<Field> phiV_;
  std::vector<MultiField> phiD_;
  Field sum_r2_, sum_i2_;
};

/// Time-RMS residual of recorded displacements under material b. The snapshots
/// must start at t = 0 and be evenly spaced.
Field residual_field(const std::vector<Snapshot>& snaps, const MaterialField& b, const BoundarySpec& bc,
                     int order = 2);

struct DiscriminationOptions {
  int every_steps = 4;           ///< residual sampling interval in solver steps
  double active_fraction = 0.05;  ///< field-active: peak |u| at least this fraction of the run max
  double significance = 10.0;     ///< detected: residual at least this multiple of the self-residual floor
  double floor_clamp = 0.01;      ///< the per-node floor is at least this fraction of the largest floor
  double quiet_fraction = 1e-9;   ///< quiescent: peak |u| below this fraction of the run max
  double max_floor_ratio = 0.1;   ///< largest allowed self-residual / inertia
  double detect_fraction = 0.8;   ///< share of a region's active nodes that must be detected

  friend bool operator==(const DiscriminationOptions&, const DiscriminationOptions&) = default;
};

struct RegionVerdict {
  int region = 0;
  std::size_t nodes = 0, mismatch = 0, active = 0, detected = 0, quiescent = 0, quiescent_detected = 0;
  /// Node-RMS of the residual and of the self-residual over the active mismatched nodes; 0 when there are none.
  double residual_rms = 0.0, floor_rms = 0.0;
  double contrast() const { return floor_rms > 0.0 ? residual_rms / floor_rms : 0.0; }
  /// "match", "mismatch detected", "missed", "unidentifiable" or "inconclusive".
  std::string verdict;
};

struct ContingencyCounts {
  std::size_t mismatch_active_detected = 0, mismatch_active_missed = 0;
  std::size_t mismatch_weak_detected = 0, mismatch_weak_clear = 0;
  std::size_t mismatch_quiescent_detected = 0, mismatch_quiescent_clear = 0;
  std::size_t match_detected = 0, match_clear = 0;
  /// Matched nodes whose stencil reaches a mismatched one; not classified.
  std::size_t boundary_band = 0;
};

struct DiscriminationReport {
  Grid grid;
  Field residual;     ///< time-RMS residual under material B
  Field floor;        ///< the same under material A
  Field peak;         ///< max_t |u|
  std::vector<unsigned char> support;   ///< 1 unless quiescent; the complement approximates the unidentifiable set
  std::vector<unsigned char> mismatch;  ///< sum_j mu_j / rho differs between A and B
  std::vector<unsigned char> active, detected;
  double floor_max = 0.0, inertia_max = 0.0, peak_max = 0.0;
  ContingencyCounts counts;
  std::vector<RegionVerdict> regions;

  /// Some mismatched nodes were never reached by the wave.
  bool unidentifiable() const { return counts.mismatch_quiescent_clear + counts.mismatch_quiescent_detected > 0; }
  /// No false detections, nothing detected where the field vanished, and no region missed.
  bool pass() const;
  std::string to_text() const;
  std::string contingency_csv() const;
};

/// Runs material A, then compares residuals under B = (b_base, b_regions) and
/// under A itself. Verdicts are given per entry of b_regions. Throws
/// CoarseSnapshotError when the self-residual is not small against the inertia.
DiscriminationReport uniqueness_experiment(const RunSpec& a, const Material& b_base,
                                           const std::vector<Region>& b_regions,
                                           const DiscriminationOptions& opt = {});

}  // namespace visco
