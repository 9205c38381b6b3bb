#pragma once

// Compression-based information estimates for symbol strings.
//
// Both compressors write a real bit stream; the reported bit count is the
// stream length, so losslessness is checked on exactly what is counted.

#include <cstdint>
#include <string>
#include <vector>

#include "wchaos/coding.hpp"

namespace wchaos {

enum class Estimator { LZ78, PairGrowth };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

struct CompressionResult {
  std::uint64_t bits = 0;
  std::uint64_t phrase_count = 0;
  Estimator estimator = Estimator::LZ78;
};

struct EncodedStream {
  std::vector<std::uint64_t> words;
  std::uint64_t bits = 0;
  std::uint64_t phrase_count = 0;
};

/// LZ78 incremental parsing.  Each phrase costs ceil(log2 |dictionary|) bits
/// for the reference (the dictionary holds the empty phrase plus every earlier
/// phrase) and max(1, ceil(log2 N)) bits for the new symbol.  A trailing
/// partial phrase is sent as a full one; the decoder truncates to n.
EncodedStream lz78_encode(const SymbolSequence& s);
SymbolSequence lz78_decode(const EncodedStream& stream, std::size_t n, std::uint32_t alphabet_size);
CompressionResult lz78_bits(const SymbolSequence& s);

/// Pair-growth: the dictionary starts as the N single symbols; each phrase is
/// the longest dictionary match followed by the longest dictionary match after
/// it, and the concatenation joins the dictionary.  The two references are
/// sent as one integer below D^2 (D = |dictionary|) in ceil(log2 D^2) bits; a
/// lone closing reference costs ceil(log2 D).  At the end of input a match may
/// stop inside a dictionary phrase (the decoder truncates to n).
EncodedStream pairgrowth_encode(const SymbolSequence& s);
SymbolSequence pairgrowth_decode(const EncodedStream& stream, std::size_t n, std::uint32_t alphabet_size);
CompressionResult pairgrowth_bits(const SymbolSequence& s);

CompressionResult compress_bits(const SymbolSequence& s, Estimator e);

/// Empirical Shannon entropy of the overlapping k-blocks, divided by k.
/// Throws SampleSizeError unless length >= 100 k.
double block_entropy(const SymbolSequence& s, std::size_t k);

struct InfoCurve {
  std::vector<std::size_t> schedule;
  std::vector<double> values;  // bits
  Estimator estimator = Estimator::LZ78;

  std::string to_csv() const;
};

/// Compressed size of each prefix s[0, n_j).
InfoCurve info_curve(const SymbolSequence& s, const std::vector<std::size_t>& schedule, Estimator e);

/// n_0, n_0 * ratio, ... (count terms, rounded to integers, strictly increasing).
std::vector<std::size_t> geometric_schedule(std::size_t start, double ratio, std::size_t count);

}  // namespace wchaos
