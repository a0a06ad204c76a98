#pragma once

// Closed-form corrections for free-radical bulk/solution polymerization:
// volume shrinkage with conversion and the gel/glass diffusion limitation of
// the propagation and termination rate constants.
//
// Every physical constant is an input. Values used in tests and data/ are
// illustrative fixtures, not measured MMA properties.

namespace trackmpc::kinetics {

/// J/(mol K)
inline constexpr double kGasConstant = 8.314;

struct ArrheniusPair {
  double prefactor = 0.0;
  double activation_energy = 0.0;  // J/mol
};

struct KineticsParams {
  double rho_p = 1.0;   // polymer density, kg/m^3
  double rho_m = 1.0;   // monomer density, kg/m^3
  double M0 = 1.0;      // initial monomer mass, kg
  double f_s = 0.0;     // solvent fraction, [0, 1)
  double A_gel = 0.0;
  double B_gel = 0.0;
  double theta_p = 0.0;
  double theta_t = 0.0;
  ArrheniusPair arrhenius_p;
  ArrheniusPair arrhenius_t;

  void validate() const;
};

struct KineticsState {
  double x = 0.0;         // conversion
  double phi_p = 0.0;     // polymer volume fraction
  double lambda_0 = 0.0;  // live radical zeroth moment, mol/m^3
  double T = 300.0;       // K

  void validate() const;
};

double shrinkage_factor(double rho_p, double rho_m);
double solvent_beta(double f_s);
double mixture_volume(const KineticsParams& params, double x, double epsilon, double beta);
double diffusion_factor(double phi_p, double A_gel, double B_gel);
double effective_kp(double k_p0, double theta_p, double lambda_0, double D);
double effective_kt(double k_t0, double theta_t, double lambda_0, double D);
double arrhenius(double prefactor, double activation_energy, double T);

struct EffectiveRates {
  double k_p0;
  double k_t0;
  double D;
  double k_p;
  double k_t;
};

/// Evaluates the full correction chain for one state.
EffectiveRates effective_rates(const KineticsParams& params, const KineticsState& state);

}  // namespace trackmpc::kinetics
