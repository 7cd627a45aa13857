#pragma once

// Current budget, linear battery discharge model, and lifetime estimates.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace soilnet {

struct BudgetComponent {
  std::string name;
  double i_on_mA = 0;
  double t_on_s = 0;
  double period_s = 1;
};

struct CurrentBudget {
  std::vector<BudgetComponent> components;
  double sleep_floor_mA = 0;

  /// Radio status window (22.7 mA over 1.9 s every 120 s) and sensing
  /// (0.64 mA over 0.79 s every 60 s), sleeping at zero current.
  static CurrentBudget reference_mote();
  const BudgetComponent* find(std::string_view name) const;
  void validate() const;
};

double duty_cycle_avg(double i_on_mA, double t_on_s, double period_s);
double total_avg_current(const CurrentBudget& budget);
double consumed_mAh(double i_avg_mA, double duration_h);

struct BatteryModel {
  int cells = 2;
  double capacity_mAh = 2200;
  double v_full_cell = 1.5;
  double v_cutoff_cell = 0.8;
  double flash_floor_pack = 2.2;
  double radio_floor_pack = 2.10;
  double temp_coeff_mV_per_C = 4.0;  // per cell

  void validate() const;
  double pack_full() const { return cells * v_full_cell; }
  double pack_cutoff() const { return cells * v_cutoff_cell; }
  /// Linear charge-voltage map plus the temperature term; not clamped.
  double pack_voltage(double consumed_mAh, double temp_delta_c = 0.0) const;
  /// mAh drawn when the pack has fallen to `pack_volts` (at reference temperature).
  double consumed_at(double pack_volts) const;
};

/// Linear map from per-cell voltage drop to charge consumed.
double consumed_from_voltage(double dv_per_cell_V, const BatteryModel& model);

enum class LifetimeStop { pack_cutoff, flash_floor };

double predict_lifetime_days(const BatteryModel& model, double i_avg_mA, LifetimeStop stop);

/// Pack voltage at each sample of a uniformly spaced temperature series
/// under constant average load. Sample k is at k * interval_s.
std::vector<double> voltage_trace(const BatteryModel& model, double i_avg_mA, std::span<const double> temps_c,
                                  double interval_s, double t_ref_c);

}  // namespace soilnet
