#include "oracles.hpp"

#include "ntrack/error.hpp"
#include "ntrack/signal.hpp"

#include <doctest.h>

#include <cmath>

using namespace ntrack;

namespace {

constexpr double kRate = 500.0;

std::size_t seconds(double s) { return static_cast<std::size_t>(s * kRate); }

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an ntrack::Error");
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("bandpass 1-20 Hz attenuates 50 Hz in white noise by at least 20 dB") {
    const auto x = oracle::single(oracle::white_noise(seconds(60), 7), kRate);
    const auto y = bandpass_filter(x, FilterSpec::bandpass(1.0, 20.0));
    const auto out = oracle::row(y);
    const auto steady = oracle::trim(out, seconds(1), seconds(1));
    const double p10 = oracle::band_power(steady, 10.0, 1.0, kRate);
    const double p50 = oracle::band_power(steady, 50.0, 1.0, kRate);
    CHECK(10.0 * std::log10(p10 / p50) >= 20.0);
}

TEST_CASE("bandpass removes DC") {
    const auto x = oracle::single(std::vector<double>(seconds(10), 3.0), kRate);
    const auto out = oracle::row(bandpass_filter(x, FilterSpec::bandpass(1.0, 20.0)));
    for (double v : oracle::trim(out, seconds(1), seconds(1))) REQUIRE(std::abs(v) < 1e-3 * 3.0);
}

TEST_CASE("bandpass keeps a 10 Hz sine within 1 dB") {
    const auto x = oracle::single(oracle::sine(10.0, kRate, seconds(10)), kRate);
    const auto out = oracle::row(bandpass_filter(x, FilterSpec::bandpass(1.0, 20.0)));
    const double amp = oracle::tone_amplitude(oracle::trim(out, seconds(1), seconds(1)), 10.0, kRate);
    CHECK(std::abs(oracle::db(amp)) <= 1.0);
}

TEST_CASE("bandpass has no group delay") {
    // Zero-phase: the filtered sine stays in phase with the input.
    const auto in = oracle::sine(8.0, kRate, seconds(10));
    const auto out = oracle::row(bandpass_filter(oracle::single(in, kRate), FilterSpec::bandpass(1.0, 20.0)));
    CHECK(oracle::pearson(oracle::trim(in, seconds(1), seconds(1)), oracle::trim(out, seconds(1), seconds(1))) > 0.9999);
}

TEST_CASE("notch at 50 Hz") {
    SUBCASE("centre attenuated by 30 dB") {
        const auto x = oracle::single(oracle::sine(50.0, kRate, seconds(20)), kRate);
        const auto out = oracle::row(notch_filter(x, FilterSpec::notch(50.0)));
        CHECK(oracle::tone_amplitude(oracle::trim(out, seconds(2), seconds(2)), 50.0, kRate) <= 0.0316);
    }
    SUBCASE("10 Hz passes within 0.5 dB") {
        const auto x = oracle::single(oracle::sine(10.0, kRate, seconds(20)), kRate);
        const auto out = oracle::row(notch_filter(x, FilterSpec::notch(50.0)));
        const double amp = oracle::tone_amplitude(oracle::trim(out, seconds(1), seconds(1)), 10.0, kRate);
        CHECK(std::abs(oracle::db(amp)) <= 0.5);
    }
    SUBCASE("zeros stay zero") {
        const auto out = notch_filter(oracle::single(std::vector<double>(1000, 0.0), kRate), FilterSpec::notch(50.0));
        CHECK(out.data.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("design gain matches the analytic Butterworth magnitude") {
    // Prewarped bandpass: |H|^2 = 1 / (1 + W^(2n)), W = (w^2 - w0^2) / (w bw).
    const auto sos = design_filter(FilterSpec::bandpass(1.0, 20.0, 4), kRate);
    auto warp = [](double f) { return 2.0 * kRate * std::tan(std::numbers::pi * f / kRate); };
    const double lo = warp(1.0), hi = warp(20.0), w0sq = lo * hi, bw = hi - lo;
    for (double f : {0.5, 2.0, 10.0, 30.0, 50.0, 120.0}) {
        const double w = warp(f);
        const double omega = (w * w - w0sq) / (w * bw);
        const double expected = 1.0 / std::sqrt(1.0 + std::pow(omega, 8));
        CHECK(sos_gain(sos, f, kRate) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("resample 500 -> 50 Hz") {
    SUBCASE("sample count follows the ratio") {
        const auto x = oracle::single(oracle::white_noise(5000, 1), kRate);
        CHECK(resample(x, 50.0).samples() == 500);
    }
    SUBCASE("5 Hz sine preserved") {
        const auto x = oracle::single(oracle::sine(5.0, kRate, seconds(20)), kRate);
        const auto y = resample(x, 50.0);
        CHECK(y.rate == 50.0);
        const auto truth = oracle::sine(5.0, 50.0, y.samples());
        CHECK(oracle::pearson(oracle::row(y), truth) >= 0.999);
    }
    SUBCASE("same rate is the identity") {
        const auto x = oracle::single(oracle::white_noise(777, 2), kRate);
        const auto y = resample(x, kRate);
        CHECK(y.data == x.data);
    }
    SUBCASE("non-integer ratio goes through the polyphase path") {
        const double rate = 441.0;
        const auto x = oracle::single(oracle::sine(5.0, rate, 8820), rate);
        const auto y = resample(x, 400.0);
        CHECK(y.rate == 400.0);
        CHECK(std::abs(static_cast<double>(y.samples()) - 8000.0) <= 1.0);
        const auto truth = oracle::sine(5.0, 400.0, y.samples());
        CHECK(oracle::pearson(oracle::trim(oracle::row(y), 400, 400), oracle::trim(truth, 400, 400)) >= 0.999);
    }
}

TEST_CASE("downsampled band-limited noise interpolates back to the original") {
    const auto raw = oracle::single(oracle::white_noise(seconds(30), 11), kRate);
    const auto band = bandpass_filter(raw, FilterSpec::bandpass(1.0, 20.0));
    const auto down = resample(band, 50.0);
    const auto low = oracle::row(down);
    const auto orig = oracle::row(band);
    std::vector<double> back, ref;
    for (std::size_t i = seconds(3); i < orig.size() - seconds(3); ++i) {
        back.push_back(oracle::sinc_interp(low, 50.0, static_cast<double>(i) / kRate));
        ref.push_back(orig[i]);
    }
    CHECK(oracle::pearson(back, ref) >= 0.99);
}

TEST_CASE("normalize") {
    SUBCASE("hand example") {
        const auto y = normalize(oracle::single({1.0, 2.0, 3.0}, 1.0));
        CHECK(y.data(0, 0) == doctest::Approx(-1.224744871391589).epsilon(1e-12));
        CHECK(std::abs(y.data(0, 1)) < 1e-15);
        CHECK(y.data(0, 2) == doctest::Approx(1.224744871391589).epsilon(1e-12));
    }
    SUBCASE("idempotent and unit moments") {
        const auto x = oracle::single(oracle::white_noise(4000, 3), kRate);
        const auto once = normalize(x);
        const auto twice = normalize(once);
        CHECK((once.data - twice.data).cwiseAbs().maxCoeff() < 1e-10);
        const double mean = once.data.mean();
        const double sd = std::sqrt((once.data.array() - mean).square().mean());
        CHECK(std::abs(mean) < 1e-10);
        CHECK(std::abs(sd - 1.0) < 1e-10);
    }
    SUBCASE("constant channel is rejected") {
        CHECK(code_of([] { (void)normalize(oracle::single({5.0, 5.0, 5.0}, 1.0, "Cz")); }) == ErrorCode::ConstantChannel);
        try {
            (void)normalize(oracle::single({5.0, 5.0, 5.0}, 1.0, "Cz"));
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("Cz") != std::string::npos);
        }
    }
}

TEST_CASE("shape preservation across channels") {
    Matrix m(3, 2000);
    for (int c = 0; c < 3; ++c) {
        const auto n = oracle::white_noise(2000, 20 + c);
        for (int i = 0; i < 2000; ++i) m(c, i) = n[i];
    }
    const TimeSeries x(m, kRate, {"a", "b", "c"});
    for (const auto& y : {bandpass_filter(x, FilterSpec::bandpass(1, 20)), notch_filter(x, FilterSpec::notch(50)), normalize(x)}) {
        CHECK(y.channels() == 3);
        CHECK(y.samples() == 2000);
        CHECK(y.labels == x.labels);
        CHECK(y.rate == kRate);
    }
    const auto r = resample(x, 100.0);
    CHECK(r.channels() == 3);
    CHECK(r.labels == x.labels);
}

// A 4th-order Butterworth response squared (forward-backward) has an analytic
// once-vs-twice white-noise correlation of 0.9892; 0.999 would need a much
// sharper transition band. Kept at the stated threshold and reported.
TEST_CASE("repeated bandpass stays close to a single pass on white noise" * doctest::may_fail()) {
    const auto x = oracle::single(oracle::white_noise(seconds(60), 5), kRate);
    const auto spec = FilterSpec::bandpass(1.0, 20.0);
    const auto once = bandpass_filter(x, spec);
    const auto twice = bandpass_filter(once, spec);
    const double r = oracle::pearson(oracle::row(once), oracle::row(twice));
    MESSAGE("once-vs-twice correlation on white noise: " << r);
    CHECK(r >= 0.999);
}

TEST_CASE("repeated bandpass is idempotent on passband content") {
    std::vector<double> x(seconds(60), 0.0);
    for (double f : {2.5, 4.0, 6.5, 9.0, 12.0, 15.0}) {
        const auto s = oracle::sine(f, kRate, x.size(), 1.0, f);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += s[i];
    }
    const auto spec = FilterSpec::bandpass(1.0, 20.0);
    const auto once = bandpass_filter(oracle::single(x, kRate), spec);
    const auto twice = bandpass_filter(once, spec);
    const auto a = oracle::row(once), b = oracle::row(twice);
    CHECK(oracle::pearson(oracle::trim(a, seconds(1), seconds(1)), oracle::trim(b, seconds(1), seconds(1))) >= 0.999);
    // The analytic value stated above, from the designed cascade itself.
    const auto sos = design_filter(spec, kRate);
    double s3 = 0.0, s2 = 0.0, s4 = 0.0;
    for (double f = 0.0; f <= kRate / 2; f += 0.001) {
        const double g = std::pow(sos_gain(sos, f, kRate), 2);
        s2 += g * g;
        s3 += g * g * g;
        s4 += g * g * g * g;
    }
    CHECK(s3 / std::sqrt(s2 * s4) == doctest::Approx(0.9892).epsilon(1e-3));
}

TEST_CASE("error paths") {
    const auto x = oracle::single(oracle::white_noise(1000, 4), kRate);
    CHECK(code_of([&] { (void)bandpass_filter(x, FilterSpec::bandpass(1.0, 250.0)); }) == ErrorCode::InvalidFilterSpec);
    CHECK(code_of([&] { (void)bandpass_filter(x, FilterSpec::bandpass(30.0, 20.0)); }) == ErrorCode::InvalidFilterSpec);
    CHECK(code_of([&] { (void)notch_filter(x, FilterSpec::notch(260.0)); }) == ErrorCode::InvalidFilterSpec);
    CHECK(code_of([&] { (void)resample(x, 1000.0); }) == ErrorCode::UpsamplingUnsupported);
    CHECK(code_of([&] { (void)resample(x, 0.0); }) == ErrorCode::InvalidRate);
    auto bad = x;
    bad.data(0, 10) = std::nan("");
    CHECK(code_of([&] { (void)bandpass_filter(bad, FilterSpec::bandpass(1.0, 20.0)); }) == ErrorCode::NonFiniteInput);
    CHECK(code_of([&] { (void)TimeSeries(x.data, kRate, {"a", "b"}); }) == ErrorCode::InvalidSeries);
}
