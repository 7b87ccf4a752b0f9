#pragma once

#include <cmath>

// Unit system used across the library: energies in micro-eV, times in ns.
// Rates obtained from energies divide by hbar once, at the point of use.

namespace snsim {

inline constexpr double hbar_uev_ns = 0.6582119569;   // ueV * ns
inline constexpr double ev_to_joule = 1.602176634e-19;
inline constexpr double pi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / pi; }

// Photon flux |alpha|^2 in 1/ns for a given optical power and carrier energy.
inline double photon_flux_per_ns(double power_pW, double carrier_eV) {
  const double watts = power_pW * 1e-12;
  const double per_second = watts / (carrier_eV * ev_to_joule);
  return per_second * 1e-9;
}

}  // namespace snsim
