#include "spikezip/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "spikezip/io_util.hpp"

namespace spikezip {

SymbolHistogram SymbolHistogram::from_indexes(const std::vector<int>& indexes, int k) {
    if (k < 1) throw std::invalid_argument("histogram needs at least one symbol");
    SymbolHistogram h;
    h.counts.assign(static_cast<size_t>(k), 0);
    for (int idx : indexes) h.add(idx);
    return h;
}

void SymbolHistogram::add(int symbol, uint64_t n) {
    if (symbol < 0 || static_cast<size_t>(symbol) >= counts.size())
        throw std::invalid_argument("symbol out of range");
    counts[static_cast<size_t>(symbol)] += n;
    total += n;
}

int SymbolHistogram::nonzero_symbols() const {
    return static_cast<int>(std::count_if(counts.begin(), counts.end(),
                                          [](uint64_t c) { return c > 0; }));
}

double entropy(const SymbolHistogram& hist) {
    if (hist.total == 0) throw std::invalid_argument("entropy of an empty histogram");
    double bits = 0.0;
    for (uint64_t c : hist.counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(hist.total);
        bits -= p * std::log2(p);
    }
    return bits;
}

double HuffmanTable::expected_length(const SymbolHistogram& hist) const {
    if (hist.total == 0) throw std::invalid_argument("expected length of an empty histogram");
    double bits = 0.0;
    for (size_t s = 0; s < hist.counts.size(); ++s) {
        if (hist.counts[s] == 0) continue;
        if (s >= lengths.size() || lengths[s] == 0)
            throw std::runtime_error("unknown symbol");
        bits += static_cast<double>(hist.counts[s]) * lengths[s];
    }
    return bits / static_cast<double>(hist.total);
}

namespace {

/// Assigns canonical code values for the given lengths: symbols sorted by
/// (length, id) receive consecutive codes, shifted left at every length
/// increase.
HuffmanTable canonicalize(std::vector<uint8_t> lengths) {
    std::vector<size_t> order;
    for (size_t s = 0; s < lengths.size(); ++s)
        if (lengths[s] > 0) order.push_back(s);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return lengths[a] != lengths[b] ? lengths[a] < lengths[b] : a < b;
    });

    HuffmanTable table;
    table.codes.assign(lengths.size(), 0);
    uint64_t code = 0;
    int prev_len = 0;
    for (size_t s : order) {
        code <<= (lengths[s] - prev_len);
        prev_len = lengths[s];
        if (code >> lengths[s] != 0) throw std::runtime_error("code lengths violate Kraft");
        table.codes[s] = code;
        ++code;
    }
    table.lengths = std::move(lengths);
    return table;
}

}  // namespace

HuffmanTable huffman_build(const SymbolHistogram& hist) {
    const size_t k = hist.counts.size();
    std::vector<size_t> alive;
    for (size_t s = 0; s < k; ++s)
        if (hist.counts[s] > 0) alive.push_back(s);
    if (alive.empty()) throw std::invalid_argument("cannot build a code with no symbols");

    std::vector<uint8_t> lengths(k, 0);
    if (alive.size() == 1) {
        lengths[alive[0]] = 1;  // a lone symbol still needs one bit on the wire
        return canonicalize(std::move(lengths));
    }

    // Plain two-queue-free Huffman over (weight, insertion order): leaves in
    // symbol order, then internal nodes in creation order, so ties resolve
    // identically on every run.
    struct Node {
        uint64_t weight;
        uint64_t seq;
        int left = -1, right = -1;  // node ids; -1 for leaves
        size_t symbol = 0;
    };
    std::vector<Node> nodes;
    nodes.reserve(2 * alive.size());
    auto cmp = [&](int a, int b) {
        if (nodes[a].weight != nodes[b].weight) return nodes[a].weight > nodes[b].weight;
        return nodes[a].seq > nodes[b].seq;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> heap(cmp);
    uint64_t seq = 0;
    for (size_t s : alive) {
        nodes.push_back({hist.counts[s], seq++, -1, -1, s});
        heap.push(static_cast<int>(nodes.size()) - 1);
    }
    while (heap.size() > 1) {
        const int a = heap.top();
        heap.pop();
        const int b = heap.top();
        heap.pop();
        nodes.push_back({nodes[a].weight + nodes[b].weight, seq++, a, b, 0});
        heap.push(static_cast<int>(nodes.size()) - 1);
    }

    // Depth-first traversal assigns the lengths.
    std::vector<std::pair<int, int>> stack{{heap.top(), 0}};
    while (!stack.empty()) {
        auto [id, depth] = stack.back();
        stack.pop_back();
        const Node& n = nodes[id];
        if (n.left < 0) {
            if (depth > 63) throw std::runtime_error("code length exceeds 63 bits");
            lengths[n.symbol] = static_cast<uint8_t>(depth);
        } else {
            stack.push_back({n.left, depth + 1});
            stack.push_back({n.right, depth + 1});
        }
    }
    return canonicalize(std::move(lengths));
}

HuffmanTable table_from_lengths(const std::vector<uint8_t>& lengths) {
    return canonicalize(lengths);
}

double CompressedBlock::payload_bits_per_symbol() const {
    const uint64_t n = index_count();
    if (n == 0) throw std::invalid_argument("empty block has no per-symbol rate");
    return static_cast<double>(payload_bits) / static_cast<double>(n);
}

std::vector<uint8_t> CompressedBlock::serialize() const {
    io::ByteWriter w;
    w.magic("SPKC");
    w.u16(1);
    w.u32(config_digest);
    w.u32(k);
    w.u32(n_feat);
    w.u64(spike_count);
    for (uint64_t c : counts) w.u64(c);
    for (uint8_t l : lengths) w.u8(l);
    w.u64(payload_bits);
    w.raw(payload.data(), payload.size());
    w.u32(io::crc32(w.bytes));
    return std::move(w.bytes);
}

CompressedBlock CompressedBlock::deserialize(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 4) throw std::runtime_error("compressed block: truncated file");
    io::ByteReader r(bytes);
    r.expect_magic("SPKC", "compressed block");
    const uint16_t version = r.u16();
    if (version != 1) throw std::runtime_error("compressed block: unsupported version");

    CompressedBlock b;
    b.config_digest = r.u32();
    b.k = r.u32();
    if (b.k == 0 || b.k > (1u << 16)) throw std::runtime_error("compressed block: bad symbol count");
    b.n_feat = r.u32();
    b.spike_count = r.u64();
    b.counts.resize(b.k);
    for (auto& c : b.counts) c = r.u64();
    b.lengths.resize(b.k);
    for (auto& l : b.lengths) l = r.u8();
    b.payload_bits = r.u64();
    b.payload.resize((b.payload_bits + 7) / 8);
    r.raw(b.payload.data(), b.payload.size());

    if (r.pos() + 4 != r.size()) throw std::runtime_error("compressed block: trailing bytes");
    const uint32_t want = io::crc32(bytes.data(), r.pos());
    const uint32_t got = r.u32();
    if (want != got) throw std::runtime_error("compressed block: checksum mismatch");
    return b;
}

CompressedBlock encode_block(const std::vector<int>& indexes, const HuffmanTable& table,
                             const CaeConfig& config) {
    config.validate();
    if (indexes.size() % static_cast<size_t>(config.n_feat) != 0)
        throw std::invalid_argument("index count is not a multiple of the feature count");
    const int k = config.k_codewords;
    if (table.lengths.size() != static_cast<size_t>(k))
        throw std::invalid_argument("code table size does not match the codebook");

    CompressedBlock b;
    b.config_digest = config.digest();
    b.k = static_cast<uint32_t>(k);
    b.n_feat = static_cast<uint32_t>(config.n_feat);
    b.spike_count = indexes.size() / static_cast<size_t>(config.n_feat);
    b.counts.assign(static_cast<size_t>(k), 0);
    b.lengths = table.lengths;

    uint64_t acc = 0;
    int nacc = 0;
    for (int idx : indexes) {
        if (idx < 0 || idx >= k) throw std::invalid_argument("symbol out of range");
        const int len = table.lengths[static_cast<size_t>(idx)];
        if (len == 0) throw std::runtime_error("unknown symbol");
        ++b.counts[static_cast<size_t>(idx)];
        const uint64_t code = table.codes[static_cast<size_t>(idx)];
        for (int i = len - 1; i >= 0; --i) {
            acc = (acc << 1) | ((code >> i) & 1u);
            if (++nacc == 8) {
                b.payload.push_back(static_cast<uint8_t>(acc));
                acc = 0;
                nacc = 0;
            }
        }
        b.payload_bits += static_cast<uint64_t>(len);
    }
    if (nacc > 0) b.payload.push_back(static_cast<uint8_t>(acc << (8 - nacc)));
    return b;
}

std::vector<int> decode_block(const CompressedBlock& block) {
    if (block.lengths.size() != block.k)
        throw std::runtime_error("compressed block: malformed code table");
    // Canonical decoding tables: per length, the first code value and the
    // symbols in canonical order.
    int max_len = 0;
    for (uint8_t l : block.lengths) max_len = std::max(max_len, static_cast<int>(l));
    const uint64_t n = block.index_count();
    if (n > 0 && max_len == 0) throw std::runtime_error("compressed block: malformed code table");

    std::vector<std::vector<int>> by_len(static_cast<size_t>(max_len) + 1);
    for (size_t s = 0; s < block.lengths.size(); ++s)
        if (block.lengths[s] > 0) by_len[block.lengths[s]].push_back(static_cast<int>(s));
    std::vector<uint64_t> first_code(static_cast<size_t>(max_len) + 1, 0);
    uint64_t code = 0;
    for (int l = 1; l <= max_len; ++l) {
        code <<= 1;
        first_code[static_cast<size_t>(l)] = code;
        code += by_len[static_cast<size_t>(l)].size();
    }

    std::vector<int> out;
    out.reserve(n);
    uint64_t bit = 0;
    auto next_bit = [&]() -> uint64_t {
        if (bit >= block.payload_bits) throw std::runtime_error("compressed block: payload too short");
        const uint64_t byte = bit >> 3;
        const int shift = 7 - static_cast<int>(bit & 7);
        ++bit;
        return (block.payload[byte] >> shift) & 1u;
    };
    for (uint64_t i = 0; i < n; ++i) {
        uint64_t value = 0;
        int len = 0;
        for (;;) {
            value = (value << 1) | next_bit();
            ++len;
            if (len > max_len) throw std::runtime_error("compressed block: unknown symbol");
            const auto& syms = by_len[static_cast<size_t>(len)];
            if (!syms.empty() && value >= first_code[static_cast<size_t>(len)] &&
                value < first_code[static_cast<size_t>(len)] + syms.size()) {
                out.push_back(syms[value - first_code[static_cast<size_t>(len)]]);
                break;
            }
        }
    }
    if (bit != block.payload_bits)
        throw std::runtime_error("compressed block: payload length mismatch");
    return out;
}

double compression_ratio(const CaeConfig& config, double bits_per_index) {
    if (!(bits_per_index > 0.0)) throw std::invalid_argument("bits per index must be positive");
    return (static_cast<double>(config.m_spk) * config.d_samples * config.w_bits) /
           (static_cast<double>(config.n_feat) * bits_per_index);
}

double distortion_bound(int d, int r, int k, double h) {
    if (d < 1 || r < 1 || k < 1) throw std::invalid_argument("distortion bound needs d,r,k >= 1");
    const double dd = d, rr = r;
    const double log_vd = 0.5 * dd * std::log(std::numbers::pi) - std::lgamma(0.5 * dd + 1.0);
    const double log_bound = std::log(dd / (dd + rr)) -
                             (rr / dd) * (log_vd + std::log(static_cast<double>(k))) +
                             (rr / dd) * h;
    return std::exp(log_bound);
}

}  // namespace spikezip
