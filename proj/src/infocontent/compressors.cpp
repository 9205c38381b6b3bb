#include <algorithm>
#include <bit>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "wchaos/infocontent.hpp"

namespace wchaos {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

unsigned ceil_log2(std::uint64_t x) { return x <= 1 ? 0 : 64 - std::countl_zero(x - 1); }

unsigned symbol_bits(std::uint32_t alphabet) { return std::max(1u, ceil_log2(alphabet)); }

class BitWriter {
 public:
  void put(std::uint64_t value, unsigned width) {
    for (unsigned done = 0; done < width;) {
      const unsigned offset = static_cast<unsigned>(bits_ % 64);
      if (offset == 0) words_.push_back(0);
      const unsigned take = std::min(width - done, 64 - offset);
      const std::uint64_t chunk = (value >> done) & (take == 64 ? ~0ULL : ((1ULL << take) - 1));
      words_.back() |= chunk << offset;
      done += take;
      bits_ += take;
    }
  }
  EncodedStream finish(std::uint64_t phrases) && { return {std::move(words_), bits_, phrases}; }

 private:
  std::vector<std::uint64_t> words_;
  std::uint64_t bits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const EncodedStream& s) : s_(s) {}
  std::uint64_t get(unsigned width) {
    if (pos_ + width > s_.bits) throw ParameterError("encoded stream ended early");
    std::uint64_t value = 0;
    for (unsigned done = 0; done < width;) {
      const unsigned offset = static_cast<unsigned>(pos_ % 64);
      const unsigned take = std::min(width - done, 64 - offset);
      const std::uint64_t word = s_.words[pos_ / 64] >> offset;
      value |= (word & (take == 64 ? ~0ULL : ((1ULL << take) - 1))) << done;
      done += take;
      pos_ += take;
    }
    return value;
  }
  std::uint64_t position() const { return pos_; }

 private:
  const EncodedStream& s_;
  std::uint64_t pos_ = 0;
};

/// Symbol trie; dense child tables for small alphabets, a hash map otherwise.
class Trie {
 public:
  explicit Trie(std::uint32_t alphabet) : alphabet_(alphabet), dense_(alphabet <= 16) { add_node(); }

  std::uint32_t child(std::uint32_t node, Symbol c) const {
    if (dense_) return table_[static_cast<std::size_t>(node) * alphabet_ + c];
    auto it = sparse_.find(key(node, c));
    return it == sparse_.end() ? kNone : it->second;
  }

  std::uint32_t add_child(std::uint32_t node, Symbol c) {
    const std::uint32_t id = add_node();
    if (dense_) {
      table_[static_cast<std::size_t>(node) * alphabet_ + c] = id;
    } else {
      sparse_.emplace(key(node, c), id);
    }
    return id;
  }

  std::uint32_t size() const { return count_; }

 private:
  static std::uint64_t key(std::uint32_t node, Symbol c) { return (std::uint64_t{node} << 32) | c; }

  std::uint32_t add_node() {
    if (count_ == kNone) throw ResourceError("trie exceeds 2^32 nodes");
    if (dense_) table_.resize(table_.size() + alphabet_, kNone);
    return count_++;
  }

  std::uint32_t alphabet_;
  bool dense_;
  std::uint32_t count_ = 0;
  std::vector<std::uint32_t> table_;
  std::unordered_map<std::uint64_t, std::uint32_t> sparse_;
};

void check_symbols(const SymbolSequence& s) {
  if (s.alphabet_size == 0) throw ParameterError("alphabet size must be positive");
  for (Symbol c : s.symbols) {
    if (c >= s.alphabet_size) {
      throw ParameterError(fmt::format("symbol {} outside alphabet of size {}", c, s.alphabet_size));
    }
  }
}

SymbolSequence empty_like(std::size_t n, std::uint32_t alphabet) {
  SymbolSequence out;
  out.alphabet_size = alphabet;
  out.symbols.reserve(n);
  return out;
}

}  // namespace

std::string to_string(Estimator e) { return e == Estimator::LZ78 ? "lz78" : "pairgrowth"; }

Estimator estimator_from_string(const std::string& name) {
  if (name == "lz78") return Estimator::LZ78;
  if (name == "pairgrowth") return Estimator::PairGrowth;
  throw ParameterError("unknown estimator '" + name + "' (expected lz78 or pairgrowth)");
}

// --- LZ78 -----------------------------------------------------------------

EncodedStream lz78_encode(const SymbolSequence& s) {
  check_symbols(s);
  const unsigned sym_bits = symbol_bits(s.alphabet_size);
  // node ids double as phrase indices: node k is created by phrase k
  Trie trie(s.alphabet_size);
  BitWriter out;
  std::uint64_t phrases = 0;
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    std::uint32_t node = 0;
    for (std::uint32_t next; i < n && (next = trie.child(node, s.symbols[i])) != kNone; ++i) node = next;
    const unsigned ref_bits = ceil_log2(trie.size());
    Symbol c = 0;
    if (i < n) {
      c = s.symbols[i++];
      trie.add_child(node, c);
    }
    out.put(node, ref_bits);
    out.put(c, sym_bits);
    ++phrases;
  }
  return std::move(out).finish(phrases);
}

SymbolSequence lz78_decode(const EncodedStream& stream, std::size_t n, std::uint32_t alphabet_size) {
  SymbolSequence out = empty_like(n, alphabet_size);
  const unsigned sym_bits = symbol_bits(alphabet_size);
  std::vector<std::uint32_t> parent{kNone};
  std::vector<Symbol> last{0};
  std::vector<Symbol> buffer;
  BitReader in(stream);
  while (out.size() < n) {
    const auto ref = static_cast<std::uint32_t>(in.get(ceil_log2(parent.size())));
    const auto c = static_cast<Symbol>(in.get(sym_bits));
    if (ref >= parent.size()) throw ParameterError("encoded stream references an unknown phrase");
    buffer.clear();
    for (std::uint32_t k = ref; k != 0; k = parent[k]) buffer.push_back(last[k]);
    for (auto it = buffer.rbegin(); it != buffer.rend() && out.size() < n; ++it) out.symbols.push_back(*it);
    if (out.size() < n) {
      out.symbols.push_back(c);
      parent.push_back(ref);
      last.push_back(c);
    }
  }
  return out;
}

CompressionResult lz78_bits(const SymbolSequence& s) {
  const EncodedStream e = lz78_encode(s);
  return {e.bits, e.phrase_count, Estimator::LZ78};
}

// --- pair growth ------------------------------------------------------------

namespace {

class PairGrowthEncoder {
 public:
  explicit PairGrowthEncoder(const SymbolSequence& s) : s_(s), trie_(s.alphabet_size) {
    terminal_.push_back(kNone);
    witness_.push_back(kNone);
  }

  EncodedStream run() {
    BitWriter out;
    std::uint64_t phrases = 0;
    const std::size_t n = s_.size();
    std::size_t i = 0;
    while (i < n) {
      const std::uint64_t d = dictionary_size_;
      const Match first = match(i);
      std::size_t j = i + first.length;
      if (j >= n) {
        out.put(first.phrase, ceil_log2(d));
      } else {
        const Match second = match(j);
        out.put(first.phrase * d + second.phrase, ceil_log2(d * d));
        const std::size_t end = j + second.length;
        if (end < n) insert(i, end);
        j = end;
      }
      i = j;
      ++phrases;
    }
    return std::move(out).finish(phrases);
  }

 private:
  struct Match {
    std::uint32_t phrase;
    std::size_t length;
  };

  // Longest dictionary phrase starting at i; at the end of input, any phrase
  // the remaining suffix is a prefix of.
  Match match(std::size_t i) {
    const std::size_t n = s_.size();
    ensure_symbol(s_.symbols[i]);
    std::uint32_t node = 0;
    std::size_t depth = 0;
    Match best{kNone, 0};
    for (std::uint32_t next; i + depth < n && (next = trie_.child(node, s_.symbols[i + depth])) != kNone;) {
      node = next;
      ++depth;
      if (terminal_[node] != kNone) best = {terminal_[node], depth};
    }
    if (i + depth == n && depth > best.length) best = {witness_[node], depth};
    return best;
  }

  void ensure_symbol(Symbol c) {
    if (trie_.child(0, c) != kNone) return;
    trie_.add_child(0, c);
    terminal_.push_back(c);
    witness_.push_back(c);
  }

  void insert(std::size_t begin, std::size_t end) {
    const auto phrase = static_cast<std::uint32_t>(dictionary_size_++);
    std::uint32_t node = 0;
    for (std::size_t k = begin; k < end; ++k) {
      std::uint32_t next = trie_.child(node, s_.symbols[k]);
      if (next == kNone) {
        next = trie_.add_child(node, s_.symbols[k]);
        terminal_.push_back(kNone);
        witness_.push_back(phrase);
      }
      node = next;
    }
    terminal_[node] = phrase;
  }

  const SymbolSequence& s_;
  Trie trie_;
  std::vector<std::uint32_t> terminal_;
  std::vector<std::uint32_t> witness_;
  std::uint64_t dictionary_size_ = s_.alphabet_size;
};

}  // namespace

EncodedStream pairgrowth_encode(const SymbolSequence& s) {
  check_symbols(s);
  return PairGrowthEncoder(s).run();
}

SymbolSequence pairgrowth_decode(const EncodedStream& stream, std::size_t n, std::uint32_t alphabet_size) {
  SymbolSequence out = empty_like(n, alphabet_size);
  // phrases >= alphabet_size are pairs of earlier phrases
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::vector<std::uint32_t> stack;
  auto expand = [&](std::uint32_t phrase) {
    stack.assign(1, phrase);
    while (!stack.empty() && out.size() < n) {
      const std::uint32_t p = stack.back();
      stack.pop_back();
      if (p < alphabet_size) {
        out.symbols.push_back(p);
      } else {
        stack.push_back(pairs[p - alphabet_size].second);
        stack.push_back(pairs[p - alphabet_size].first);
      }
    }
  };
  BitReader in(stream);
  while (out.size() < n) {
    const std::uint64_t dictionary = std::uint64_t{alphabet_size} + pairs.size();
    // a lone reference closes the stream; otherwise the pair is one integer below d^2
    const std::uint64_t remaining = stream.bits - in.position();
    const unsigned pair_bits = ceil_log2(dictionary * dictionary);
    std::uint64_t first = 0, second = 0;
    bool pair = true;
    if (remaining < pair_bits) {
      first = in.get(ceil_log2(dictionary));
      pair = false;
    } else {
      const std::uint64_t v = in.get(pair_bits);
      first = v / dictionary;
      second = v % dictionary;
    }
    if (first >= dictionary) throw ParameterError("encoded stream references an unknown phrase");
    expand(static_cast<std::uint32_t>(first));
    if (!pair || out.size() >= n) break;
    expand(static_cast<std::uint32_t>(second));
    if (out.size() < n) pairs.emplace_back(first, second);
  }
  return out;
}

CompressionResult pairgrowth_bits(const SymbolSequence& s) {
  const EncodedStream e = pairgrowth_encode(s);
  return {e.bits, e.phrase_count, Estimator::PairGrowth};
}

CompressionResult compress_bits(const SymbolSequence& s, Estimator e) {
  return e == Estimator::LZ78 ? lz78_bits(s) : pairgrowth_bits(s);
}

}  // namespace wchaos
