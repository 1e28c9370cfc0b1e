#pragma once
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fklab/discretize.hpp"
#include "fklab/rates.hpp"

namespace fklab {

// empirical constants: max observed ratio over a fixed random suite, times a safety factor
struct Calibration {
  double C0 = 1, c_kappa = 1, c0_sobolev = 1;
  double raw_C0 = 0, raw_c_kappa = 0, raw_c0_sobolev = 0;
  int functions = 0;
  double safety = 2;
};

struct CalibrationInput {
  const OperatorAssembly* jump = nullptr;  // assembly without potential, for D(f,f)
  Eigen::VectorXd phi1;                    // ground state on the same grid
  double eps = 0.05;
  int functions = 500;
  std::uint64_t seed = 7;
  std::vector<double> s_list{0.01, 0.03, 0.1, 0.3, 1.0};
  double safety = 2;
  double window = 0.75;  // C0 taken over |x| <= window * R
};

Calibration calibrate_constants(const KernelSpec& k, const PotentialSpec& p, const CalibrationInput& in);
void apply_calibration(RateBundle& b, const Calibration& c);

}  // namespace fklab
