#pragma once

namespace hjbexec {

/// |p|^e, with 0 at p = 0 (computed as exp(e * ln|p|)).
double abs_pow(double p, double e);

/// H(p) = phi |p|^(1 + 1/phi).
double hamiltonian_H(double p, double phi);

/// H~(p) = phi (|p| / (1 + phi))^(1 + 1/phi).
double hamiltonian_Htilde(double p, double phi);

/// Optimal rate -(-z/kappa)^(1/phi) q. DomainError when z > 0 or kappa <= 0.
double feedback_rate(double z, double kappa, double q, double phi);

/// (-z/kappa)^(1/phi), the liquidation intensity; z is capped at -1e-30.
double feedback_intensity(double z, double kappa, double phi);

}  // namespace hjbexec
