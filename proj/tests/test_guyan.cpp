#include "modalupd/guyan.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "modalupd/beam.hpp"
#include "modalupd/modal.hpp"

namespace {

using namespace modalupd;

FullSystem nominal_beam() {
  const BeamGeometry g;
  return assemble(g, UpdatingParameters::nominal(g.element_count));
}

std::vector<int> translation_masters(int node_count) {
  std::vector<int> masters;
  for (int i = 0; i < node_count; ++i) {
    masters.push_back(2 * i);
  }
  return masters;
}

TEST(Reduce, HandTwoDofChain) {
  // Ground - spring - dof0 - spring - dof1, unit stiffnesses and masses.
  FullSystem sys;
  sys.stiffness.resize(2, 2);
  sys.stiffness << 2.0, -1.0, -1.0, 1.0;
  sys.mass = Eigen::MatrixXd::Identity(2, 2);

  const ReducedSystem red = reduce(sys, {0});

  ASSERT_EQ(red.dof_count(), 1);
  EXPECT_NEAR(red.stiffness(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(red.mass(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(red.transformation(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(red.transformation(1, 0), 1.0, 1e-14);
}

TEST(Reduce, AllMastersIsAPermutation) {
  FullSystem sys;
  sys.stiffness.resize(2, 2);
  sys.stiffness << 2.0, -1.0, -1.0, 1.0;
  sys.mass.resize(2, 2);
  sys.mass << 3.0, 0.0, 0.0, 5.0;

  const ReducedSystem red = reduce(sys, {1, 0});

  EXPECT_NEAR(red.stiffness(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(red.stiffness(1, 1), 2.0, 1e-14);
  EXPECT_NEAR(red.stiffness(0, 1), -1.0, 1e-14);
  EXPECT_NEAR(red.mass(0, 0), 5.0, 1e-14);
  EXPECT_NEAR(red.mass(1, 1), 3.0, 1e-14);
}

TEST(Reduce, MasterRowsOfTransformationAreIdentity) {
  const FullSystem sys = nominal_beam();
  const std::vector<int> masters = translation_masters(13);
  const ReducedSystem red = reduce(sys, masters);

  ASSERT_EQ(red.transformation.rows(), sys.dof_count());
  ASSERT_EQ(red.transformation.cols(), 13);
  for (int j = 0; j < 13; ++j) {
    for (int i = 0; i < 13; ++i) {
      EXPECT_NEAR(red.transformation(masters[static_cast<std::size_t>(i)], j), i == j ? 1.0 : 0.0,
                  1e-14);
    }
  }
}

TEST(Reduce, SchurComplementMatchesTransformedStiffness) {
  const FullSystem sys = nominal_beam();
  const ReducedSystem red = reduce(sys, translation_masters(13));

  const Eigen::MatrixXd via_t =
      red.transformation.transpose() * sys.stiffness * red.transformation;
  EXPECT_LT((red.stiffness - via_t).cwiseAbs().maxCoeff() / red.stiffness.cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(Reduce, ReducedMatricesAreSymmetricAndDefinite) {
  const FullSystem sys = nominal_beam();
  const ReducedSystem red = reduce(sys, translation_masters(13));

  EXPECT_LT((red.stiffness - red.stiffness.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((red.mass - red.mass.transpose()).cwiseAbs().maxCoeff(), 1e-12);

  Eigen::LLT<Eigen::MatrixXd> mass_llt(red.mass);
  EXPECT_EQ(mass_llt.info(), Eigen::Success);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(red.stiffness, Eigen::EigenvaluesOnly);
  EXPECT_GE(spectrum.eigenvalues().minCoeff(),
            -1e-10 * spectrum.eigenvalues().cwiseAbs().maxCoeff());
}

TEST(Reduce, MasslessSlavesReduceExactly) {
  // Grounded spring chain with interior massless DOFs; static condensation
  // is exact there, so the reduced pencil must match a direct QZ solve of
  // the singular-mass full pencil.
  FullSystem sys;
  sys.stiffness.resize(4, 4);
  sys.stiffness << 3.0, -2.0, 0.0, 0.0,  //
      -2.0, 5.0, -3.0, 0.0,              //
      0.0, -3.0, 7.0, -4.0,              //
      0.0, 0.0, -4.0, 4.0;
  sys.mass = Eigen::MatrixXd::Zero(4, 4);
  sys.mass(0, 0) = 2.0;
  sys.mass(3, 3) = 1.0;

  const ReducedSystem red = reduce(sys, {0, 3});
  const ModalSet reduced_modes = solve_modes(red, 2, false);

  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> qz;
  qz.compute(sys.stiffness, sys.mass);
  std::vector<double> finite;
  for (int i = 0; i < 4; ++i) {
    const double beta = qz.betas()(i);
    const std::complex<double> alpha = qz.alphas()(i);
    if (std::abs(beta) > 1e-8 * sys.mass.cwiseAbs().maxCoeff()) {
      finite.push_back(alpha.real() / beta);
    }
  }
  ASSERT_EQ(finite.size(), 2u);
  std::sort(finite.begin(), finite.end());

  for (int i = 0; i < 2; ++i) {
    const double omega2 = std::pow(2.0 * std::numbers::pi * reduced_modes.frequencies_hz(i), 2);
    EXPECT_NEAR(omega2, finite[static_cast<std::size_t>(i)],
                1e-9 * finite[static_cast<std::size_t>(i)]);
  }
}

TEST(Reduce, TranslationMastersPreserveBeamFrequencies) {
  const FullSystem sys = nominal_beam();
  const ModalSet full = solve_modes(sys, 5);
  const ReducedSystem red = reduce(sys, translation_masters(13));
  const ModalSet reduced = solve_modes(red, 5);

  std::printf("\n  mode   full (Hz)   reduced (Hz)   error\n");
  for (int i = 0; i < 5; ++i) {
    const double err = (reduced.frequencies_hz(i) - full.frequencies_hz(i)) / full.frequencies_hz(i);
    std::printf("  %4d   %9.3f   %12.3f   %+.4f%%\n", i + 1, full.frequencies_hz(i),
                reduced.frequencies_hz(i), 100.0 * err);
    EXPECT_LT(std::abs(err), 0.02) << "mode " << i + 1;
    // Static condensation stiffens the model; frequencies move up.
    EXPECT_GE(reduced.frequencies_hz(i), full.frequencies_hz(i) - 1e-9);
  }
  std::printf("\n");
}

TEST(Reduce, RigidBodyContentSurvivesReduction) {
  const FullSystem sys = nominal_beam();
  const ReducedSystem red = reduce(sys, translation_masters(13));
  const ModalSet all = solve_modes(red, 0, false);

  const double top = std::pow(2.0 * std::numbers::pi * all.frequencies_hz(all.mode_count() - 1), 2);
  int rigid = 0;
  for (int i = 0; i < all.mode_count(); ++i) {
    if (std::pow(2.0 * std::numbers::pi * all.frequencies_hz(i), 2) < rigid_mode_tolerance * top) {
      ++rigid;
    }
  }
  EXPECT_EQ(rigid, 2);
}

TEST(Reduce, RefusesMasterSetThatLeavesRigidContentInSlaves) {
  // A single translational master cannot carry both planar rigid modes; the
  // slave-slave stiffness block is then singular.
  const FullSystem sys = nominal_beam();
  EXPECT_THROW(reduce(sys, {0}), std::runtime_error);
}

TEST(Reduce, ValidatesMasterIndices) {
  const FullSystem sys = nominal_beam();
  EXPECT_THROW(reduce(sys, {}), std::invalid_argument);
  EXPECT_THROW(reduce(sys, {0, 2, 26}), std::invalid_argument);
  EXPECT_THROW(reduce(sys, {0, 2, -1}), std::invalid_argument);
  EXPECT_THROW(reduce(sys, {0, 2, 2}), std::invalid_argument);
}

TEST(Expand, MasterEntriesRoundTrip) {
  const FullSystem sys = nominal_beam();
  const std::vector<int> masters = translation_masters(13);
  const ReducedSystem red = reduce(sys, masters);
  const ModalSet reduced = solve_modes(red, 3);

  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd lifted = expand(reduced.shapes.col(k), red.transformation);
    ASSERT_EQ(lifted.size(), sys.dof_count());
    for (int j = 0; j < 13; ++j) {
      EXPECT_NEAR(lifted(masters[static_cast<std::size_t>(j)]), reduced.shapes(j, k), 1e-12);
    }
  }
}

TEST(Expand, RejectsMismatchedShape) {
  const FullSystem sys = nominal_beam();
  const ReducedSystem red = reduce(sys, translation_masters(13));
  EXPECT_THROW(expand(Eigen::VectorXd::Ones(12), red.transformation), std::invalid_argument);
}

}  // namespace
