#include "soilnet/energy.hpp"

#include <cmath>

namespace soilnet {

CurrentBudget CurrentBudget::reference_mote() {
  return CurrentBudget{{{"radio", 22.7, 1.9, 120.0}, {"sensing", 0.64, 0.79, 60.0}}, 0.0};
}

const BudgetComponent* CurrentBudget::find(std::string_view name) const {
  for (const auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void CurrentBudget::validate() const {
  if (sleep_floor_mA < 0) throw std::invalid_argument("sleep floor must be >= 0");
  for (const auto& c : components) {
    if (c.i_on_mA < 0 || c.t_on_s < 0 || !(c.period_s > 0) || c.t_on_s > c.period_s) {
      throw std::invalid_argument("budget component '" + c.name + "' violates 0 <= t_on <= period");
    }
  }
}

double duty_cycle_avg(double i_on_mA, double t_on_s, double period_s) {
  if (!(period_s > 0)) throw std::invalid_argument("duty cycle period must be > 0");
  if (t_on_s < 0 || t_on_s > period_s) throw std::invalid_argument("t_on must lie in [0, period]");
  return i_on_mA * t_on_s / period_s;
}

double total_avg_current(const CurrentBudget& budget) {
  double total = budget.sleep_floor_mA;
  for (const auto& c : budget.components) total += duty_cycle_avg(c.i_on_mA, c.t_on_s, c.period_s);
  return total;
}

double consumed_mAh(double i_avg_mA, double duration_h) {
  if (i_avg_mA < 0 || duration_h < 0) throw std::invalid_argument("current and duration must be >= 0");
  return i_avg_mA * duration_h;
}

void BatteryModel::validate() const {
  if (cells <= 0 || !(capacity_mAh > 0)) throw std::invalid_argument("battery needs cells and capacity");
  if (!(v_cutoff_cell < v_full_cell)) throw std::invalid_argument("cutoff voltage must be below full voltage");
  for (double floor : {flash_floor_pack, radio_floor_pack}) {
    if (floor < pack_cutoff() || floor > pack_full()) {
      throw std::invalid_argument("operating floors must lie within the pack voltage range");
    }
  }
}

double BatteryModel::pack_voltage(double consumed, double temp_delta_c) const {
  const double range = pack_full() - pack_cutoff();
  return pack_full() - range * consumed / capacity_mAh + cells * temp_coeff_mV_per_C * 1e-3 * temp_delta_c;
}

double BatteryModel::consumed_at(double pack_volts) const {
  return capacity_mAh * (pack_full() - pack_volts) / (pack_full() - pack_cutoff());
}

double consumed_from_voltage(double dv_per_cell_V, const BatteryModel& model) {
  const double span = model.v_full_cell - model.v_cutoff_cell;
  if (dv_per_cell_V < 0 || dv_per_cell_V > span) {
    throw std::invalid_argument("per-cell voltage drop outside [0, v_full - v_cutoff]");
  }
  return model.capacity_mAh * dv_per_cell_V / span;
}

double predict_lifetime_days(const BatteryModel& model, double i_avg_mA, LifetimeStop stop) {
  if (!(i_avg_mA > 0)) throw std::invalid_argument("lifetime is undefined for zero average current");
  const double stop_volts = stop == LifetimeStop::flash_floor ? model.flash_floor_pack : model.pack_cutoff();
  return model.consumed_at(stop_volts) / i_avg_mA / 24.0;
}

std::vector<double> voltage_trace(const BatteryModel& model, double i_avg_mA, std::span<const double> temps_c,
                                  double interval_s, double t_ref_c) {
  std::vector<double> out;
  out.reserve(temps_c.size());
  for (std::size_t k = 0; k < temps_c.size(); ++k) {
    const double hours = static_cast<double>(k) * interval_s / 3600.0;
    out.push_back(model.pack_voltage(consumed_mAh(i_avg_mA, hours), temps_c[k] - t_ref_c));
  }
  return out;
}

}  // namespace soilnet
