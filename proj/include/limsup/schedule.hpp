#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace limsup {

// Symbolic description of the ball radius sequence r_n: positive,
// non-increasing, tending to zero.
struct RadiusSchedule {
  enum class Form { Power, Exponential, LogPower, Explicit };
  Form form = Form::Power;
  double alpha = 2.0;  // power / logPower exponent
  double c = 1.0;      // exponential rate
  double beta = 0.0;   // logPower log exponent
  std::vector<double> values;

  static RadiusSchedule power(double a) { return {Form::Power, a, 1.0, 0.0, {}}; }
  static RadiusSchedule exponential(double rate) {
    return {Form::Exponential, 2.0, rate, 0.0, {}};
  }
  static RadiusSchedule log_power(double a, double be) {
    return {Form::LogPower, a, 1.0, be, {}};
  }
  static RadiusSchedule explicit_list(std::vector<double> v) {
    return {Form::Explicit, 2.0, 1.0, 0.0, std::move(v)};
  }

  double r(uint64_t n) const {
    if (n < 1) throw std::invalid_argument("schedule index starts at 1");
    switch (form) {
      case Form::Power:
        return std::pow(static_cast<double>(n), -alpha);
      case Form::Exponential:
        return std::exp(-c * static_cast<double>(n));
      case Form::LogPower: {
        const uint64_t m = std::max<uint64_t>(n, 2);  // log 1 = 0: start at n = 2
        return std::pow(static_cast<double>(m), -alpha) *
               std::pow(std::log(static_cast<double>(m)), -beta);
      }
      case Form::Explicit:
        if (n > values.size()) throw std::invalid_argument("explicit schedule exhausted");
        return values[n - 1];
    }
    return 0.0;
  }

  bool validate(std::string* why = nullptr) const {
    auto fail = [&](const char* m) {
      if (why) *why = m;
      return false;
    };
    switch (form) {
      case Form::Power:
        if (alpha <= 0.0) return fail("power schedule needs alpha > 0");
        return true;
      case Form::Exponential:
        if (c <= 0.0) return fail("exponential schedule needs rate > 0");
        return true;
      case Form::LogPower:
        if (alpha <= 0.0) return fail("logPower schedule needs alpha > 0");
        return true;
      case Form::Explicit: {
        if (values.empty()) return fail("explicit schedule is empty");
        double prev = 1e300;
        for (double v : values) {
          if (!(v > 0.0)) return fail("explicit schedule must be positive");
          if (v > prev + 1e-15) return fail("explicit schedule must be non-increasing");
          prev = v;
        }
        return true;
      }
    }
    return fail("unknown schedule form");
  }

  std::string name() const {
    switch (form) {
      case Form::Power:
        return "power(" + std::to_string(alpha) + ")";
      case Form::Exponential:
        return "exponential(" + std::to_string(c) + ")";
      case Form::LogPower:
        return "logPower(" + std::to_string(alpha) + "," + std::to_string(beta) + ")";
      case Form::Explicit:
        return "explicit[" + std::to_string(values.size()) + "]";
    }
    return "?";
  }
};

}  // namespace limsup
