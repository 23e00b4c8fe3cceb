#include <gtest/gtest.h>

#include "tumblenav/validation.hpp"

using namespace tumblenav;

TEST(Validation, PristineBuildPasses) {
  const auto results = run_validation();
  EXPECT_EQ(results.size(), 6u);
  for (const CheckResult& r : results) {
    EXPECT_TRUE(r.passed) << r.name << " max error " << r.max_error << " tolerance " << r.tolerance;
    EXPECT_LT(r.max_error, r.tolerance) << r.name;
    EXPECT_GE(r.seconds, 0.0);
  }
}

TEST(Validation, CatchesCorruptedMeasurementJacobian) {
  ValidationHooks hooks;
  hooks.measurement_jacobian = [](const FilterState& s) {
    Mat6x21 H = measurement_jacobian(s);
    H(0, idx::dq + 1) += 1e-3;
    return H;
  };
  EXPECT_FALSE(check_measurement_jacobian(hooks, 10, 1).passed);
  EXPECT_TRUE(check_drift_jacobian(hooks, 10, 1).passed);
}

TEST(Validation, CatchesCorruptedErrorModel) {
  ValidationHooks hooks;
  hooks.error_model = [](const Vec3& w, const InertiaRatios& r, const OrbitRate& o) {
    ContinuousErrorModel m = continuous_error_model(w, r, o);
    m.A(idx::omega, idx::omega + 1) += 1e-3;
    return m;
  };
  EXPECT_FALSE(check_drift_jacobian(hooks, 10, 1).passed);
  EXPECT_TRUE(check_measurement_jacobian(hooks, 10, 1).passed);
}
