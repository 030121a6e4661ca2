#pragma once

#include "trivirus/families.hpp"
#include "trivirus/model.hpp"

#include <array>
#include <string>
#include <vector>

// Parameter sets of the nine worked examples. All use unit
// healing rates.
namespace trivirus::presets {

// e_i e_j^T of size n with 1-based indices, matching the usual e_i e_j^T notation.
inline Matrix unitOuter(int i, int j, int n) {
    Matrix e = Matrix::Zero(n, n);
    e(i - 1, j - 1) = 1.0;
    return e;
}

inline Matrix fourNodeB1() {
    Matrix b(4, 4);
    b << 0, 0, 0, 1.5,
         1.5, 0, 0, 0,
         0, 1.5, 0, 0,
         0, 0, 1.5, 0;
    return b;
}

inline Matrix fourNodeB2(double hat12) {
    Matrix b(4, 4);
    b << 0, 1.5 + hat12, 0, 0,
         0, 0, 1.5, 0,
         0, 0, 0, 1.5,
         1.5, 0, 0, 0;
    return b;
}

inline Matrix fourNodeB3(double hat13, double hat22, double hat31) {
    Matrix b(4, 4);
    b << 1, 0, 0.5 + hat13, 0,
         0, 1 + hat22, 0.5, 0,
         0, 0.5, 0, 1,
         0.3 + hat31, 0, 1.2, 0;
    return b;
}

// Knob values (hat beta^3_13, hat beta^2_12, hat beta^3_22, hat beta^3_31).
inline TriVirusParams fourNode(double hat3_13, double hat2_12, double hat3_22, double hat3_31) {
    return TriVirusParams::unitHealing({fourNodeB1(), fourNodeB2(hat2_12), fourNodeB3(hat3_13, hat3_22, hat3_31)});
}

inline TriVirusParams example1() { return fourNode(0.0, -0.1, -0.1, 0.1); }
inline TriVirusParams example2() { return fourNode(0.05, 0.0, 0.0, 0.0); }
inline TriVirusParams example3() { return fourNode(-0.1, 0.0, 0.0, 0.0); }
inline TriVirusParams example4() { return fourNode(0.0, 0.0, 0.0, 0.0); }

inline Matrix fiveNodeB() {
    Matrix b(5, 5);
    b << 1, 0, 2, 0, 0.5,
         0.5, 2, 0, 0, 0,
         0, 5, 0.1, 0, 0,
         0.1, 0, 0, 0.2, 0,
         0, 0, 0, 0.1, 0.9;
    return b;
}

inline TriVirusParams example5() {
    const Matrix b = fiveNodeB();
    return TriVirusParams::unitHealing({b, b, b});
}

inline TriVirusParams example6() {
    const Matrix b = fiveNodeB();
    const Matrix b2 = b + 0.5 * unitOuter(1, 4, 5);
    return TriVirusParams::unitHealing({b, b2, b2 + 0.1 * unitOuter(5, 1, 5)});
}

inline TriVirusParams example7() {
    const Matrix b = fiveNodeB();
    return TriVirusParams::unitHealing({b, b + 2.0 * unitOuter(1, 4, 5), b + 0.1 * unitOuter(5, 1, 5)});
}

inline TriVirusParams example8() {
    const Matrix b = fiveNodeB();
    return TriVirusParams::unitHealing(
        {b + 0.7 * unitOuter(3, 2, 5), b + 2.0 * unitOuter(1, 4, 5), b + 0.1 * unitOuter(5, 1, 5)});
}

inline Matrix block2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

inline Matrix assemble(const Matrix& topLeft, const Matrix& bottomRight) {
    const Matrix c = Matrix::Constant(2, 2, 0.001);
    Matrix m(4, 4);
    m << topLeft, c, c, bottomRight;
    return m;
}

inline TriVirusParams example9() {
    const Matrix b11 = block2(1.6, 1, 1, 1.6);
    const Matrix b12 = block2(2.1, 0.156, 3.0659, 1.1);
    const Matrix b21 = block2(1.7, 1, 1.2, 0.5);
    const Matrix b22 = block2(1.6, 1, 1.2, 0);
    return TriVirusParams::unitHealing({assemble(b11, b21), assemble(b12, b22), assemble(b22, b11)});
}

// The two initial-condition classes used for Example 9: virus 1 heavy on the
// first community, or virus 2 heavy on it; virus 3 heavy on the second.
inline std::array<SystemState, 2> example9InitialConditions() {
    const Vector high = (Vector(4) << 0.5, 0.5, 0.1, 0.1).finished();
    const Vector low = Vector::Constant(4, 0.1);
    const Vector third = (Vector(4) << 0.1, 0.1, 0.5, 0.5).finished();
    return {SystemState::fromBlocks({high, low, third}), SystemState::fromBlocks({low, high, third})};
}

inline LineFamily lineFamilyOf(const TriVirusParams& fourNodeParams) {
    return buildLineFamily(fourNodeParams.beta(0), fourNodeParams.beta(1), fourNodeParams.beta(2));
}

inline PlaneFamily example4Plane() { return buildGeneralPlane(fourNodeB1(), fourNodeB2(0.0), fourNodeB3(0, 0, 0)); }

inline PlaneFamily example5Plane() { return buildIdenticalPlane(Vector::Ones(5), fiveNodeB()); }

}  // namespace trivirus::presets
