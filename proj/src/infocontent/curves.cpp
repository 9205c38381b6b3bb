#include <algorithm>
#include <bit>
#include <cmath>
#include <string_view>

#include <fmt/format.h>

#include "wchaos/infocontent.hpp"

namespace wchaos {

namespace {

double entropy_of_sorted(auto& keys) {
  std::sort(keys.begin(), keys.end());
  const double total = static_cast<double>(keys.size());
  double h = 0.0;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    const double p = static_cast<double>(j - i) / total;
    h -= p * std::log2(p);
    i = j;
  }
  return h;
}

}  // namespace

double block_entropy(const SymbolSequence& s, std::size_t k) {
  if (k == 0) throw ParameterError("block length must be positive");
  if (s.size() < 100 * k) {
    throw SampleSizeError(fmt::format("block entropy at k = {} needs at least {} symbols (got {})", k, 100 * k,
                                      s.size()));
  }
  const std::size_t blocks = s.size() - k + 1;
  const unsigned width = std::max(1u, static_cast<unsigned>(std::bit_width(std::max(1u, s.alphabet_size - 1))));
  double h = 0.0;
  if (width * k <= 64) {
    std::vector<std::uint64_t> keys(blocks);
    const std::uint64_t mask = width * k == 64 ? ~0ULL : (1ULL << (width * k)) - 1;
    std::uint64_t rolling = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      rolling = ((rolling << width) | s.symbols[i]) & mask;
      if (i + 1 >= k) keys[i + 1 - k] = rolling;
    }
    h = entropy_of_sorted(keys);
  } else {
    std::vector<std::basic_string_view<Symbol>> keys;
    keys.reserve(blocks);
    for (std::size_t i = 0; i < blocks; ++i) keys.emplace_back(s.symbols.data() + i, k);
    h = entropy_of_sorted(keys);
  }
  return h / static_cast<double>(k);
}

std::string InfoCurve::to_csv() const {
  std::string out = "n,bits,estimator\n";
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    out += fmt::format("{},{},{}\n", schedule[i], values[i], to_string(estimator));
  }
  return out;
}

InfoCurve info_curve(const SymbolSequence& s, const std::vector<std::size_t>& schedule, Estimator e) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] == 0) throw ParameterError("schedule lengths must be positive");
    if (i && schedule[i] <= schedule[i - 1]) throw ParameterError("schedule must be strictly increasing");
  }
  if (!schedule.empty() && schedule.back() > s.size()) {
    throw ParameterError(fmt::format("schedule reaches n = {} but the string has {} symbols", schedule.back(),
                                     s.size()));
  }
  InfoCurve curve;
  curve.schedule = schedule;
  curve.estimator = e;
  for (std::size_t n : schedule) {
    curve.values.push_back(static_cast<double>(compress_bits(s.prefix(n), e).bits));
  }
  return curve;
}

std::vector<std::size_t> geometric_schedule(std::size_t start, double ratio, std::size_t count) {
  if (start == 0) throw ParameterError("schedule start must be positive");
  if (!(ratio > 1.0) && count > 1) throw ParameterError("schedule ratio must exceed 1");
  std::vector<std::size_t> out;
  double v = static_cast<double>(start);
  while (out.size() < count) {
    auto n = static_cast<std::size_t>(std::llround(v));
    if (out.empty() || n > out.back()) {
      out.push_back(n);
    } else {
      out.push_back(out.back() + 1);
    }
    v *= ratio;
  }
  return out;
}

}  // namespace wchaos
