#include "openvlc/reed_solomon.hpp"

#include <array>
#include <string>

namespace openvlc::fec {

namespace {

constexpr unsigned kFieldPoly = 0x11D;
constexpr std::size_t kFieldSize = 255;

struct GaloisField {
    std::array<std::uint8_t, 2 * kFieldSize> exp{};
    std::array<std::uint8_t, 256> log{};

    constexpr GaloisField()
    {
        unsigned x = 1;
        for (std::size_t i = 0; i < kFieldSize; ++i) {
            exp[i] = static_cast<std::uint8_t>(x);
            log[x] = static_cast<std::uint8_t>(i);
            x <<= 1;
            if (x & 0x100) {
                x ^= kFieldPoly;
            }
        }
        for (std::size_t i = kFieldSize; i < exp.size(); ++i) {
            exp[i] = exp[i - kFieldSize];
        }
    }

    constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) const
    {
        if (a == 0 || b == 0) {
            return 0;
        }
        return exp[log[a] + log[b]];
    }

    constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) const
    {
        if (a == 0) {
            return 0;
        }
        return exp[(log[a] + kFieldSize - log[b]) % kFieldSize];
    }

    constexpr std::uint8_t pow_alpha(std::size_t n) const { return exp[n % kFieldSize]; }

    constexpr std::uint8_t inv(std::uint8_t a) const { return exp[(kFieldSize - log[a]) % kFieldSize]; }
};

constexpr GaloisField kGf{};

// Generator polynomial, highest degree first (g[0] == 1).
constexpr std::array<std::uint8_t, kRsParityBytes + 1> make_generator()
{
    std::array<std::uint8_t, kRsParityBytes + 1> g{};
    g[0] = 1;
    std::size_t degree = 0;
    for (std::size_t i = 0; i < kRsParityBytes; ++i) {
        const std::uint8_t root = kGf.pow_alpha(i);
        // multiply by (x - root)
        for (std::size_t j = degree + 1; j > 0; --j) {
            g[j] ^= kGf.mul(g[j - 1], root);
        }
        ++degree;
    }
    return g;
}

constexpr auto kGenerator = make_generator();

// Evaluates the received polynomial (codeword[0] is the highest power) at alpha^j.
std::array<std::uint8_t, kRsParityBytes> syndromes(std::span<const std::uint8_t> coded)
{
    std::array<std::uint8_t, kRsParityBytes> s{};
    for (std::size_t j = 0; j < kRsParityBytes; ++j) {
        const std::uint8_t x = kGf.pow_alpha(j);
        std::uint8_t acc = 0;
        for (auto c : coded) {
            acc = static_cast<std::uint8_t>(kGf.mul(acc, x) ^ c);
        }
        s[j] = acc;
    }
    return s;
}

}  // namespace

Bytes rs_encode_block(std::span<const std::uint8_t> data)
{
    if (data.empty() || data.size() > kRsMaxDataBytes) {
        throw Error(Errc::BlockTooLarge,
                    "rs_encode_block: block of " + std::to_string(data.size()) + " bytes (1..200 allowed)");
    }
    std::array<std::uint8_t, kRsParityBytes> parity{};
    for (auto byte : data) {
        const std::uint8_t feedback = byte ^ parity[0];
        for (std::size_t j = 0; j + 1 < kRsParityBytes; ++j) {
            parity[j] = parity[j + 1] ^ kGf.mul(feedback, kGenerator[j + 1]);
        }
        parity[kRsParityBytes - 1] = kGf.mul(feedback, kGenerator[kRsParityBytes]);
    }
    Bytes out(data.begin(), data.end());
    out.insert(out.end(), parity.begin(), parity.end());
    return out;
}

RsDecoded rs_decode_block(std::span<const std::uint8_t> coded)
{
    const std::size_t n = coded.size();
    if (n <= kRsParityBytes || n > kRsMaxDataBytes + kRsParityBytes) {
        throw Error(Errc::BlockTooLarge,
                    "rs_decode_block: coded block of " + std::to_string(n) + " bytes (17..216 allowed)");
    }

    const auto s = syndromes(coded);
    bool clean = true;
    for (auto v : s) {
        clean = clean && v == 0;
    }
    if (clean) {
        return RsDecoded{Bytes(coded.begin(), coded.end() - kRsParityBytes), 0};
    }

    // Berlekamp-Massey; polynomials stored lowest degree first.
    std::array<std::uint8_t, kRsParityBytes + 1> lambda{};
    std::array<std::uint8_t, kRsParityBytes + 1> prev{};
    lambda[0] = 1;
    prev[0] = 1;
    std::size_t errors = 0;
    std::size_t shift = 1;
    std::uint8_t prev_discrepancy = 1;
    for (std::size_t step = 0; step < kRsParityBytes; ++step) {
        std::uint8_t d = s[step];
        for (std::size_t i = 1; i <= errors; ++i) {
            d ^= kGf.mul(lambda[i], s[step - i]);
        }
        if (d == 0) {
            ++shift;
            continue;
        }
        const std::uint8_t scale = kGf.div(d, prev_discrepancy);
        auto updated = lambda;
        for (std::size_t i = 0; i + shift <= kRsParityBytes; ++i) {
            updated[i + shift] ^= kGf.mul(scale, prev[i]);
        }
        if (2 * errors <= step) {
            prev = lambda;
            errors = step + 1 - errors;
            prev_discrepancy = d;
            shift = 1;
        } else {
            ++shift;
        }
        lambda = updated;
    }

    if (errors > kRsMaxCorrectable) {
        throw Error(Errc::Uncorrectable, "rs_decode_block: more than 8 byte errors");
    }
    for (std::size_t i = errors + 1; i < lambda.size(); ++i) {
        if (lambda[i] != 0) {
            throw Error(Errc::Uncorrectable, "rs_decode_block: inconsistent locator");
        }
    }

    // Error evaluator: omega = S * lambda mod x^16.
    std::array<std::uint8_t, kRsParityBytes> omega{};
    for (std::size_t i = 0; i < kRsParityBytes; ++i) {
        std::uint8_t acc = 0;
        for (std::size_t j = 0; j <= i && j <= errors; ++j) {
            acc ^= kGf.mul(lambda[j], s[i - j]);
        }
        omega[i] = acc;
    }

    Bytes fixed(coded.begin(), coded.end());
    std::size_t found = 0;
    // Chien search restricted to the transmitted positions; a root inside the
    // shortened (implicit zero) region means the pattern is uncorrectable.
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t power = n - 1 - pos;
        const std::uint8_t x_inv = kGf.pow_alpha(kFieldSize - power % kFieldSize);
        std::uint8_t eval = 0;
        std::uint8_t xp = 1;
        for (std::size_t i = 0; i <= errors; ++i) {
            eval ^= kGf.mul(lambda[i], xp);
            xp = kGf.mul(xp, x_inv);
        }
        if (eval != 0) {
            continue;
        }
        std::uint8_t omega_val = 0;
        xp = 1;
        for (std::size_t i = 0; i < kRsParityBytes; ++i) {
            omega_val ^= kGf.mul(omega[i], xp);
            xp = kGf.mul(xp, x_inv);
        }
        // Formal derivative keeps the odd terms: lambda'(x) = sum lambda[i] x^(i-1), i odd.
        std::uint8_t deriv = 0;
        const std::uint8_t x_inv_sq = kGf.mul(x_inv, x_inv);
        xp = 1;
        for (std::size_t i = 1; i <= errors; i += 2) {
            deriv ^= kGf.mul(lambda[i], xp);
            xp = kGf.mul(xp, x_inv_sq);
        }
        if (deriv == 0) {
            throw Error(Errc::Uncorrectable, "rs_decode_block: repeated locator root");
        }
        const std::uint8_t x = kGf.inv(x_inv);
        const std::uint8_t magnitude = kGf.mul(x, kGf.div(omega_val, deriv));
        fixed[pos] ^= magnitude;
        ++found;
    }

    if (found != errors) {
        throw Error(Errc::Uncorrectable, "rs_decode_block: locator roots outside block");
    }
    for (auto v : syndromes(fixed)) {
        if (v != 0) {
            throw Error(Errc::Uncorrectable, "rs_decode_block: residual syndrome after correction");
        }
    }
    fixed.resize(n - kRsParityBytes);
    return RsDecoded{std::move(fixed), errors};
}

}  // namespace openvlc::fec
