#include "doctest.h"
#include "helpers.hpp"

#include "sparsegrp/kernels.hpp"

using namespace sparsegrp;
using namespace testutil;

TEST_CASE("parallel kernels reproduce the serial reference") {
    std::mt19937_64 rng(21);
    for (Index n : {1, 7, 64, 150}) {
        const GroupedDesign d(gaussian(n, 24, rng), std::vector<Index>{5, 3, 8, 8});
        Vector lam = uniform_vec(4, 0.0, 2.0, rng);
        lam[1] = 0.0;
        const Matrix a = kernels::serial::assemble_sigma_y(d, lam, 0.4);
        const Matrix b = kernels::parallel::assemble_sigma_y(d, lam, 0.4);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()));
        CHECK((kernels::assemble_sigma_y(d, lam, 0.4) - a).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()));

        const Matrix x = gaussian(n, 24, rng);
        const Vector ea = kernels::serial::block_column_energy(x, d.partition());
        const Vector eb = kernels::parallel::block_column_energy(x, d.partition());
        CHECK((ea - eb).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, ea.maxCoeff()));

        const Matrix ga = kernels::serial::gram(x);
        const Matrix gb = kernels::parallel::gram(x);
        CHECK((ga - gb).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, ga.cwiseAbs().maxCoeff()));
        CHECK((ga - x.transpose() * x).cwiseAbs().maxCoeff() <= 1e-11 * std::max(1.0, ga.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("kernel shape checks") {
    const Partition part = Partition::uniform(2, 2);
    CHECK_THROWS_AS(kernels::block_column_energy(Matrix::Zero(3, 5), part), DimensionError);
    const GroupedDesign d(Matrix::Identity(4, 4), part);
    CHECK_THROWS_AS(kernels::assemble_sigma_y(d, Vector::Ones(3), 1.0), DimensionError);
}

TEST_CASE("thread control") {
    const int before = kernels::max_threads();
    kernels::set_threads(1);
    CHECK(kernels::max_threads() == 1);
    kernels::set_threads(0);
    CHECK(kernels::max_threads() == 1);
    kernels::set_threads(before);
}
