#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gstpro/autodiff.hpp"
#include "gstpro/rng.hpp"

using namespace gstpro;

namespace {

Matrix random_matrix(int r, int c, SplitMix64& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& v : m.a) v = scale * rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("relu forward and backward gate") {
    Tape tape;
    Matrix x(1, 2);
    x(0, 0) = -1;
    x(0, 1) = 2;
    ValueId xv = tape.leaf(x, true);
    ValueId y = tape.relu(xv);
    CHECK(tape.val(y)(0, 0) == 0.0);
    CHECK(tape.val(y)(0, 1) == 2.0);
    tape.backward(tape.sum(y));
    CHECK(tape.grad(xv)(0, 0) == 0.0);
    CHECK(tape.grad(xv)(0, 1) == 1.0);
}

TEST_CASE("matmul shape rule and elementwise-square gradient") {
    Tape tape;
    SplitMix64 rng(3);
    ValueId a = tape.leaf(random_matrix(2, 3, rng));
    ValueId b = tape.leaf(random_matrix(3, 1, rng));
    ValueId c = tape.matmul(a, b);
    CHECK(tape.val(c).rows == 2);
    CHECK(tape.val(c).cols == 1);

    Matrix x(1, 3);
    x(0, 0) = 1;
    x(0, 1) = 2;
    x(0, 2) = 3;
    ValueId xv = tape.leaf(x, true);
    tape.backward(tape.sum(tape.mul(xv, xv)));
    CHECK(tape.grad(xv)(0, 0) == doctest::Approx(2.0));
    CHECK(tape.grad(xv)(0, 1) == doctest::Approx(4.0));
    CHECK(tape.grad(xv)(0, 2) == doctest::Approx(6.0));
}

TEST_CASE("fan-out accumulates gradients") {
    Tape tape;
    ValueId x = tape.leaf(Matrix(1, 1, 3.0), true);
    ValueId loss = tape.add(x, x);
    tape.backward(loss);
    CHECK(tape.grad(x)(0, 0) == 2.0);
}

TEST_CASE("loss equal to a leaf has unit gradient") {
    Tape tape;
    ValueId x = tape.leaf(Matrix(1, 1, 5.0), true);
    tape.backward(x);
    CHECK(tape.grad(x)(0, 0) == 1.0);
}

TEST_CASE("shape errors name the primitive") {
    Tape tape;
    ValueId a = tape.leaf(Matrix(2, 2));
    ValueId b = tape.leaf(Matrix(3, 2));
    CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("add"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(tape.matmul(b, b), doctest::Contains("matmul"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(tape.add_bias(a, b), doctest::Contains("add_bias"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(tape.rowwise_contract(a, tape.leaf(Matrix(2, 3))), doctest::Contains("rowwise_contract"),
                         std::invalid_argument);
    CHECK_THROWS_AS(tape.backward(a), std::invalid_argument);  // non-scalar loss
}

TEST_CASE("backward linearity") {
    SplitMix64 rng(17);
    Matrix x0 = random_matrix(3, 3, rng);
    const double a = 1.7, b = -0.6;

    auto f_term = [](Tape& t, ValueId x) { return t.sum(t.mul(x, x)); };
    auto g_term = [](Tape& t, ValueId x) { return t.sum(t.relu(x)); };

    Tape t1;
    ValueId x1 = t1.leaf(x0, true);
    t1.backward(t1.add(t1.scale(f_term(t1, x1), a), t1.scale(g_term(t1, x1), b)));

    Tape t2;
    ValueId x2 = t2.leaf(x0, true);
    t2.backward(f_term(t2, x2));
    Tape t3;
    ValueId x3 = t3.leaf(x0, true);
    t3.backward(g_term(t3, x3));

    for (size_t i = 0; i < x0.a.size(); ++i)
        CHECK(std::fabs(t1.grad(x1).a[i] - (a * t2.grad(x2).a[i] + b * t3.grad(x3).a[i])) < 1e-10);
}

TEST_CASE("zero-grad hygiene: two backward passes agree") {
    SplitMix64 rng(23);
    Matrix x0 = random_matrix(4, 2, rng);
    Tape tape;
    ValueId x = tape.leaf(x0, true);
    ValueId w = tape.leaf(random_matrix(2, 3, rng), true);
    ValueId loss = tape.sum(tape.relu(tape.matmul(x, w)));
    tape.backward(loss);
    Matrix g1 = tape.grad(x);
    Matrix gw1 = tape.grad(w);
    tape.zero_grad();
    tape.backward(loss);
    CHECK(tape.grad(x).a == g1.a);
    CHECK(tape.grad(w).a == gw1.a);
}

TEST_CASE("grad_check on a quadratic is near machine precision") {
    SplitMix64 rng(31);
    std::vector<Matrix> params{random_matrix(3, 3, rng)};
    auto build = [](Tape& t, const std::vector<ValueId>& p) { return t.sum(t.mul(p[0], p[0])); };
    GradCheckResult r = grad_check(build, params, 1e-4);
    CHECK(r.coords_checked == 9);
    CHECK(r.max_rel_error < 1e-7);
}

TEST_CASE("grad_check through relu away from the kink") {
    Matrix p0(1, 4);
    p0(0, 0) = 0.7;
    p0(0, 1) = -0.9;
    p0(0, 2) = 1.3;
    p0(0, 3) = -0.4;
    std::vector<Matrix> params{p0};
    auto build = [](Tape& t, const std::vector<ValueId>& p) { return t.sum(t.relu(p[0])); };
    GradCheckResult r = grad_check(build, params, 1e-5);
    CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("grad_check on a composed graph-conv style chain") {
    SplitMix64 rng(37);
    std::vector<Matrix> params{random_matrix(3, 4, rng), random_matrix(4, 4, rng), random_matrix(1, 4, rng)};
    Matrix adj = random_matrix(3, 3, rng, 0.5);
    auto build = [&](Tape& t, const std::vector<ValueId>& p) {
        ValueId mixed = t.matmul(t.leaf(adj), p[0]);
        ValueId activated = t.relu(t.add_bias(t.matmul(mixed, p[1]), p[2]));
        return t.mean(t.abs(activated));
    };
    GradCheckResult r = grad_check(build, params, 1e-5);
    CHECK(r.coords_checked > 0);
    CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("every primitive survives a finite-difference sweep") {
    SplitMix64 rng(41);
    std::vector<Matrix> params{random_matrix(4, 6, rng), random_matrix(3, 6, rng), random_matrix(1, 2, rng)};
    // keep rsqrt inputs positive
    auto build = [](Tape& t, const std::vector<ValueId>& p) {
        ValueId top = t.slice_rows(p[0], 0, 2);
        ValueId bottom = t.slice_rows(p[0], 2, 2);
        ValueId merged = t.concat_rows({t.sub(top, bottom), p[1]});           // 5 x 6
        ValueId contracted = t.rowwise_contract(merged, t.transpose(t.slice_rows(t.transpose(merged), 0, 2)));
        ValueId squashed = t.add_bias(contracted, p[2]);                      // 5 x 2 + bias
        ValueId positive = t.add(t.mul(squashed, squashed), t.leaf(Matrix(5, 2, 0.3)));
        return t.scale(t.sum(t.rsqrt(positive)), 0.25);
    };
    GradCheckResult r = grad_check(build, params, 1e-5);
    CHECK(r.coords_checked > 0);
    CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("rowwise_contract equals the slice/matmul/concat route") {
    SplitMix64 rng(43);
    const int rows = 3, p = 4, q = 2;
    Matrix blocks = random_matrix(rows, p * q, rng);
    Matrix vec = random_matrix(rows, q, rng);

    Tape tape;
    ValueId bv = tape.leaf(blocks, true);
    ValueId vv = tape.leaf(vec, true);
    ValueId fast = tape.rowwise_contract(bv, vv);

    // reference route through the generic primitives
    std::vector<ValueId> rows_out;
    for (int r = 0; r < rows; ++r) {
        ValueId row_blocks = tape.slice_rows(bv, r, 1);
        ValueId row_vec = tape.transpose(tape.slice_rows(vv, r, 1));
        std::vector<ValueId> entries;
        for (int i = 0; i < p; ++i) {
            // constant selector picking columns i*q .. i*q+q-1
            Matrix sel(p * q, q, 0.0);
            for (int j = 0; j < q; ++j) sel(i * q + j, j) = 1.0;
            ValueId block = tape.matmul(row_blocks, tape.leaf(sel));  // 1 x q
            entries.push_back(tape.matmul(block, row_vec));           // 1 x 1
        }
        ValueId col = tape.concat_rows(entries);  // p x 1
        rows_out.push_back(tape.transpose(col));
    }
    ValueId slow = tape.concat_rows(rows_out);
    const Matrix &f = tape.val(fast), &s = tape.val(slow);
    REQUIRE(f.rows == s.rows);
    REQUIRE(f.cols == s.cols);
    for (size_t i = 0; i < f.a.size(); ++i) CHECK(f.a[i] == doctest::Approx(s.a[i]).epsilon(1e-12));
}
