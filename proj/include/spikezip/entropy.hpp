#pragma once

#include <cstdint>
#include <vector>

#include "spikezip/cae.hpp"

namespace spikezip {

/// Occurrence counts for codeword indexes in [0, K).
struct SymbolHistogram {
    std::vector<uint64_t> counts;  // length K
    uint64_t total = 0;            // sum of counts

    static SymbolHistogram from_indexes(const std::vector<int>& indexes, int k);
    void add(int symbol, uint64_t n = 1);
    int nonzero_symbols() const;
};

/// Empirical entropy in bits per symbol: -sum p_i log2 p_i over nonzero
/// counts.  Throws std::invalid_argument on an empty histogram.
double entropy(const SymbolHistogram& hist);

/// Canonical prefix code.  `lengths[s]` is the code length in bits for symbol
/// s (0 = symbol absent from the code); `codes[s]` holds the code value in
/// the low `lengths[s]` bits, transmitted most-significant bit first.
struct HuffmanTable {
    std::vector<uint8_t> lengths;
    std::vector<uint64_t> codes;

    /// Mean code length in bits/symbol under `hist`.  Throws if the
    /// histogram uses a symbol the table does not cover.
    double expected_length(const SymbolHistogram& hist) const;
};

/// Builds an optimal prefix code for `hist` and puts it in canonical form
/// (codes assigned in order of (length, symbol id)).  Deterministic: ties in
/// the tree construction are broken by insertion order.  A lone symbol gets a
/// 1-bit code.  Throws std::invalid_argument when no symbol has a nonzero
/// count and std::runtime_error if any code would exceed 63 bits.
HuffmanTable huffman_build(const SymbolHistogram& hist);

/// Reconstructs the canonical table from its serialized lengths.
HuffmanTable table_from_lengths(const std::vector<uint8_t>& lengths);

/// A self-describing compressed unit: everything needed to decode the index
/// stream without access to the encoder state.
struct CompressedBlock {
    uint32_t config_digest = 0;
    uint32_t k = 0;
    uint32_t n_feat = 0;
    uint64_t spike_count = 0;        // decoded indexes = spike_count * n_feat
    std::vector<uint64_t> counts;    // index histogram, length k
    std::vector<uint8_t> lengths;    // canonical code lengths, length k
    uint64_t payload_bits = 0;
    std::vector<uint8_t> payload;    // MSB-first packed code words

    uint64_t index_count() const { return spike_count * n_feat; }
    double payload_bits_per_symbol() const;

    /// Byte layout: magic "SPKC", version u16, digest u32, K u32, N_feat u32,
    /// spike count u64, K counts u64, K lengths u8, payload bit count u64,
    /// payload bytes, CRC32 of all preceding bytes.
    std::vector<uint8_t> serialize() const;
    static CompressedBlock deserialize(const std::vector<uint8_t>& bytes);
};

/// Packs `indexes` with `table`.  The index count must be a multiple of
/// config.n_feat; every index must be covered by the table.
CompressedBlock encode_block(const std::vector<int>& indexes, const HuffmanTable& table,
                             const CaeConfig& config);

/// Inverse of encode_block.  Throws std::runtime_error on malformed blocks
/// (bit patterns outside the code, payload length mismatch).
std::vector<int> decode_block(const CompressedBlock& block);

/// CR = (M_spk * D * W) / (N_feat * bits_per_index).  `bits_per_index` is
/// either log2 K or a measured entropy; must be positive.
double compression_ratio(const CaeConfig& config, double bits_per_index);

/// High-rate lower bound on the mean r-th power quantization error of a
/// d-dimensional source with differential entropy `h` (nats) quantized with
/// k cells: (d/(d+r)) * (V_d * k)^(-r/d) * e^((r/d)*h), where V_d is the
/// volume of the d-dimensional unit ball.
double distortion_bound(int d, int r, int k, double h);

}  // namespace spikezip
