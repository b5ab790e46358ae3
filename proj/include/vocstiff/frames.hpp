#pragma once

#include "vocstiff/types.hpp"

namespace vocstiff {

/// Rotates the (signal, quadrature) pair by -theta into the phase's synchronous frame.
PerPhaseDq abc_to_dq(double signal, double theta, double quadrature);

/// Inverse of abc_to_dq; returns the (signal, quadrature) pair.
Vec2 dq_to_abc(PerPhaseDq x, double theta);

/// Second-order generalized integrator producing the 90 degree lagging twin of a
/// measured single-phase signal. The centre frequency is passed per step so it can
/// follow the frame frequency.
class QuadratureGenerator {
 public:
  explicit QuadratureGenerator(double gain = kSqrt2) : gain_(gain) {}

  /// Advances one sample with the input held over dt; returns the lagging twin.
  double step(double input, double omega, double dt);

  /// Presets the state to the steady response of a sinusoid with the given value
  /// and lagging twin.
  void preset(double in_phase, double quadrature) {
    x_ = in_phase;
    q_ = quadrature;
  }

  double in_phase() const { return x_; }
  double quadrature() const { return q_; }

 private:
  double gain_;
  double x_ = 0.0;
  double q_ = 0.0;
};

/// Lagging twin from the last two samples: fits a sinusoid of the given frequency
/// through them and evaluates its quadrature at the newest sample. Exact for a pure
/// tone and free of the settling lag of the integrator form, at the cost of amplifying
/// harmonics; suited to currents behind inductive branches.
class TwoSampleQuadrature {
 public:
  /// Returns the lagging twin at the newest sample.
  double step(double input, double omega, double dt);

  /// Seeds the state so that the next step, fed the tone's value at this instant,
  /// returns the given lagging twin.
  void preset(double in_phase, double quadrature, double omega, double dt);

  double quadrature() const { return q_; }

 private:
  double prev_ = 0.0;
  double q_ = 0.0;
};

}  // namespace vocstiff
