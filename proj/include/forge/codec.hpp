#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "forge/image.hpp"

namespace forge::codec {

// Fixed 64-color palette: all combinations of 4 levels {0, 85, 170, 255}/255
// per channel. Index = r_level*16 + g_level*4 + b_level, so index <-> color
// is a bijection and quantization of palette-exact images is lossless.
inline constexpr int kPaletteLevels = 4;
inline constexpr int kPaletteSize = 64;
inline constexpr int kImageSide = 16;
inline constexpr int kImageTokens = kImageSide * kImageSide;
inline constexpr int kPromptWords = 3;
inline constexpr int kSeqLen = 1 + kPromptWords + 1 + kImageTokens;  // BOS p1 p2 p3 SEP img

double palette_level_value(int level);                    // level in 0..3 -> [0,1]
std::array<double, 3> palette_color(int index);           // index in 0..63
int palette_index(int r_level, int g_level, int b_level);

// nearest palette entry in RGB (Euclidean); ties break to the lowest index
int quantize_pixel(double r, double g, double b);

std::vector<int> quantize_image(const Image& img);        // 256 row-major ids
Image render_tokens(std::span<const int> ids);            // rejects ids >= 64

// Text vocabulary with reserved subject slots. Ids are dense and fixed at
// construction: specials first, then "a", the class word, context tokens,
// then the subject slots, so checkpointed embeddings stay aligned across
// runs that bind different subjects.
class TextVocab {
public:
    static constexpr int kSubjectSlots = 12;

    static TextVocab build(const std::vector<std::string>& context_tokens);

    int id(const std::string& word) const;         // rejects unknown words
    bool contains(const std::string& word) const;
    const std::string& word(int id) const;
    int size() const { return (int)words_.size(); }

    int bos() const { return 0; }
    int sep() const { return 1; }
    int pad() const { return 2; }
    const std::string& class_word() const { return words_[4]; }

    // fixed id of "S*_k" (1-based slot); binding is idempotent
    int bind_subject_token(int slot_k);
    int subject_token_id(int slot_k) const;
    bool is_bound(int slot_k) const;
    std::vector<int> bound_slots() const;

    void save_json(const std::string& path) const;  // word -> id map

private:
    std::vector<std::string> words_;
    std::map<std::string, int> ids_;
    std::vector<bool> bound_;
    int first_slot_id_ = 0;
};

// total AR vocabulary = text ids followed by 64 image ids
inline int total_vocab(const TextVocab& v) { return v.size() + kPaletteSize; }

struct TokenSeq {
    std::vector<int> ids;  // layout: [BOS, w1, w2, w3, SEP, 256 image ids + text size]
};

struct Prompt {
    std::string subject_word;  // class word or bound "S*_k"
    std::string context_word;
    std::string text() const { return "a " + subject_word + " " + context_word; }
};

TokenSeq encode_pair(const TextVocab& vocab, const Prompt& prompt, const Image& img);
std::array<int, kPromptWords> encode_prompt(const TextVocab& vocab, const Prompt& prompt);
Image decode_image(const TextVocab& vocab, const TokenSeq& seq);

// binary token dataset: u32 count, then per record u16 length + u16 ids
void write_token_dataset(const std::string& path, std::span<const TokenSeq> seqs);
std::vector<TokenSeq> read_token_dataset(const std::string& path);

}  // namespace forge::codec
