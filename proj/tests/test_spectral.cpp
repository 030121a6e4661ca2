#include "catch_amalgamated.hpp"
#include "oracles.hpp"

#include "trivirus/spectral.hpp"

#include <random>

using namespace trivirus;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("spectral radius agrees with shifted power iteration on random irreducible matrices") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 7;
        const Matrix a = oracle::randomIrreducible(gen, n, 2.0);
        REQUIRE_THAT(spectralRadius(a), WithinRel(oracle::powerRadius(a), 1e-9));
    }
}

TEST_CASE("spectral radius of small closed forms") {
    Matrix cycle(3, 3);
    cycle << 0, 2, 0, 0, 0, 2, 2, 0, 0;
    CHECK_THAT(spectralRadius(cycle), WithinAbs(2.0, 1e-12));

    Matrix sym(2, 2);
    sym << 1, 2, 2, 1;
    CHECK_THAT(spectralRadius(sym), WithinAbs(3.0, 1e-12));
    CHECK_THAT(spectralAbscissa(sym), WithinAbs(3.0, 1e-12));

    Matrix rot(2, 2);
    rot << 0, -1, 1, 0;  // eigenvalues +-i
    CHECK_THAT(spectralAbscissa(rot), WithinAbs(0.0, 1e-12));
}

TEST_CASE("spectral radius rejects negative entries") {
    Matrix a(2, 2);
    a << 1, -0.5, 0, 1;
    CHECK_THROWS_AS(spectralRadius(a), PreconditionError);
}

TEST_CASE("Metzler abscissa agrees with the shifted-radius oracle") {
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 6;
        Matrix a = oracle::randomIrreducible(gen, n);
        for (int i = 0; i < n; ++i) a(i, i) = -3.0 * std::uniform_real_distribution<double>(0.0, 1.0)(gen);
        REQUIRE_THAT(spectralAbscissa(a), WithinAbs(oracle::metzlerAbscissa(a), 1e-9));
    }
}

TEST_CASE("strongly connected components of hand-built digraphs") {
    // 0 <-> 1, 2 -> 0, 3 isolated. Entry (i, j) > 0 is an edge j -> i.
    Matrix a = Matrix::Zero(4, 4);
    a(0, 1) = a(1, 0) = 1.0;
    a(0, 2) = 1.0;
    const auto comp = stronglyConnectedComponents(a);
    REQUIRE(comp.size() == 4);
    CHECK(comp[0] == comp[1]);
    CHECK(comp[2] != comp[0]);
    CHECK(comp[3] != comp[0]);
    CHECK(comp[3] != comp[2]);
    CHECK_FALSE(isIrreducible(a));

    a(2, 3) = a(3, 0) = 1.0;  // closes 0 -> 3 -> 2 -> 0
    CHECK(isIrreducible(a));

    CHECK(isIrreducible(Matrix::Constant(1, 1, 0.0)));
}

TEST_CASE("entrywise order verdicts") {
    const Matrix a = Matrix::Constant(2, 2, 1.0);
    Matrix b = a;
    CHECK(elementwiseGreater(a, b) == Order::GreaterEqual);
    b(0, 1) = 0.5;
    CHECK(elementwiseGreater(a, b) == Order::Greater);
    CHECK(elementwiseGreater(a, Matrix::Constant(2, 2, 0.5)) == Order::StrictlyGreater);
    b(1, 0) = 2.0;
    CHECK(elementwiseGreater(a, b) == Order::Incomparable);
    CHECK(impliesGreater(Order::StrictlyGreater));
    CHECK(impliesGreater(Order::Greater));
    CHECK_FALSE(impliesGreater(Order::GreaterEqual));
    CHECK(std::string(toString(Order::Incomparable)) == "incomparable");
}

TEST_CASE("Perron vector is positive and satisfies the eigen-equation") {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = oracle::randomIrreducible(gen, 3 + trial % 5);
        const auto p = perron(a);
        CHECK((p.vector.array() > 0.0).all());
        CHECK_THAT(p.vector.maxCoeff(), WithinAbs(1.0, 1e-15));
        CHECK((a * p.vector - p.value * p.vector).lpNorm<Eigen::Infinity>() < 1e-10);
    }
    Matrix reducible = Matrix::Zero(2, 2);
    reducible(0, 1) = 1.0;
    CHECK_THROWS_AS(perron(reducible), PreconditionError);
}

TEST_CASE("Perron monotonicity: A < N implies rho(A) < rho(N)") {
    std::mt19937_64 gen(14);
    std::uniform_int_distribution<int> pick(0, 5);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix n = oracle::randomIrreducible(gen, 6);
        Matrix a = n;
        int i = pick(gen), j = pick(gen);
        a(i, j) *= 0.5;
        if (a(i, j) == n(i, j)) a(i, (i + 1) % 6) *= 0.5;
        REQUIRE(elementwiseGreater(n, a) == Order::Greater);
        CHECK(spectralRadius(a) < spectralRadius(n));
    }
}

TEST_CASE("power iteration brackets the radius with Collatz-Wielandt bounds") {
    std::mt19937_64 gen(15);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = oracle::randomIrreducible(gen, 2 + trial % 6);
        const auto r = powerIterationRadius(a);
        const double rho = spectralRadius(a);
        CHECK(r.lower <= rho + 1e-10);
        CHECK(r.upper >= rho - 1e-10);
        CHECK_THAT(r.estimate, WithinRel(rho, 1e-9));
    }
}

TEST_CASE("Metzler classification") {
    Matrix hurwitz(2, 2);
    hurwitz << -2, 1, 1, -2;
    auto c = classifyMetzler(hurwitz);
    CHECK(c.isMetzler);
    CHECK(c.isHurwitz);
    CHECK_FALSE(c.isSingularMMatrixNegation);
    CHECK_THAT(c.abscissa, WithinAbs(-1.0, 1e-12));

    Matrix singular(2, 2);
    singular << -1, 1, 1, -1;
    c = classifyMetzler(singular);
    CHECK_FALSE(c.isHurwitz);
    CHECK(c.isSingularMMatrixNegation);

    Matrix notMetzler(2, 2);
    notMetzler << -1, -0.1, 0, -1;
    CHECK_FALSE(classifyMetzler(notMetzler).isMetzler);
}

TEST_CASE("sign of s(Lambda + N) matches sign of rho(-Lambda^-1 N) - 1") {
    std::mt19937_64 gen(16);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + trial % 7;
        const Matrix nn = oracle::randomIrreducible(gen, n);
        Vector lambda(n);
        for (int i = 0; i < n; ++i) lambda[i] = -u(gen);
        Matrix m = nn;
        m.diagonal() += lambda;
        const double s = spectralAbscissa(m);
        const double rho = spectralRadius((-lambda).cwiseInverse().asDiagonal() * nn);
        if (std::abs(rho - 1.0) < 1e-9) continue;
        CHECK((s < 0.0) == (rho < 1.0));
    }
}
