#include "forge/codec.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace forge::codec {

double palette_level_value(int level) {
    return (level * 85) / 255.0;
}

std::array<double, 3> palette_color(int index) {
    if (index < 0 || index >= kPaletteSize)
        throw std::invalid_argument("palette_color: index " + std::to_string(index) +
                                    " out of range [0,64)");
    return {palette_level_value(index >> 4), palette_level_value((index >> 2) & 3),
            palette_level_value(index & 3)};
}

int palette_index(int r_level, int g_level, int b_level) {
    return r_level * 16 + g_level * 4 + b_level;
}

int quantize_pixel(double r, double g, double b) {
    int best = 0;
    double best_d = 1e300;
    for (int idx = 0; idx < kPaletteSize; ++idx) {
        const std::array<double, 3> c = palette_color(idx);
        const double dr = r - c[0], dg = g - c[1], db = b - c[2];
        const double d = dr * dr + dg * dg + db * db;
        if (d < best_d) {  // strict: ties keep the lowest index
            best_d = d;
            best = idx;
        }
    }
    return best;
}

std::vector<int> quantize_image(const Image& img) {
    if (img.h != kImageSide || img.w != kImageSide)
        throw std::invalid_argument("quantize_image: expected 16x16, got " +
                                    std::to_string(img.h) + "x" + std::to_string(img.w));
    std::vector<int> ids;
    ids.reserve(kImageTokens);
    for (int y = 0; y < kImageSide; ++y)
        for (int x = 0; x < kImageSide; ++x)
            ids.push_back(quantize_pixel(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)));
    return ids;
}

Image render_tokens(std::span<const int> ids) {
    if ((int)ids.size() != kImageTokens)
        throw std::invalid_argument("render_tokens: expected 256 ids, got " +
                                    std::to_string(ids.size()));
    Image img(kImageSide, kImageSide);
    for (int y = 0; y < kImageSide; ++y)
        for (int x = 0; x < kImageSide; ++x) {
            const int id = ids[(std::size_t)(y * kImageSide + x)];
            if (id < 0 || id >= kPaletteSize)
                throw std::invalid_argument("render_tokens: id " + std::to_string(id) +
                                            " out of range [0,64)");
            const std::array<double, 3> c = palette_color(id);
            img.at(y, x, 0) = c[0];
            img.at(y, x, 1) = c[1];
            img.at(y, x, 2) = c[2];
        }
    return img;
}

TextVocab TextVocab::build(const std::vector<std::string>& context_tokens) {
    TextVocab v;
    v.words_ = {"<bos>", "<sep>", "<pad>", "a", "sprite"};
    for (const std::string& c : context_tokens) v.words_.push_back(c);
    v.first_slot_id_ = (int)v.words_.size();
    for (int k = 1; k <= kSubjectSlots; ++k) v.words_.push_back("S*_" + std::to_string(k));
    for (std::size_t i = 0; i < v.words_.size(); ++i) {
        if (v.ids_.count(v.words_[i]))
            throw std::invalid_argument("vocab: duplicate word " + v.words_[i]);
        v.ids_[v.words_[i]] = (int)i;
    }
    v.bound_.assign(kSubjectSlots, false);
    return v;
}

int TextVocab::id(const std::string& word) const {
    const auto it = ids_.find(word);
    if (it == ids_.end())
        throw std::invalid_argument("vocab: unknown word \"" + word + "\"");
    return it->second;
}

bool TextVocab::contains(const std::string& word) const {
    return ids_.count(word) != 0;
}

const std::string& TextVocab::word(int id) const {
    if (id < 0 || id >= (int)words_.size())
        throw std::invalid_argument("vocab: id " + std::to_string(id) + " out of range");
    return words_[(std::size_t)id];
}

int TextVocab::bind_subject_token(int slot_k) {
    if (slot_k < 1 || slot_k > kSubjectSlots)
        throw std::invalid_argument("bind_subject_token: slot " + std::to_string(slot_k) +
                                    " out of range [1," + std::to_string(kSubjectSlots) + "]");
    bound_[(std::size_t)(slot_k - 1)] = true;
    return first_slot_id_ + slot_k - 1;
}

int TextVocab::subject_token_id(int slot_k) const {
    if (slot_k < 1 || slot_k > kSubjectSlots)
        throw std::invalid_argument("subject_token_id: slot out of range");
    return first_slot_id_ + slot_k - 1;
}

bool TextVocab::is_bound(int slot_k) const {
    return bound_.at((std::size_t)(slot_k - 1));
}

std::vector<int> TextVocab::bound_slots() const {
    std::vector<int> out;
    for (int k = 1; k <= kSubjectSlots; ++k)
        if (bound_[(std::size_t)(k - 1)]) out.push_back(k);
    return out;
}

void TextVocab::save_json(const std::string& path) const {
    nlohmann::json j;
    for (const auto& [word, id] : ids_) j[word] = id;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("vocab: cannot write " + path);
    f << j.dump(2) << "\n";
}

std::array<int, kPromptWords> encode_prompt(const TextVocab& vocab, const Prompt& prompt) {
    return {vocab.id("a"), vocab.id(prompt.subject_word), vocab.id(prompt.context_word)};
}

TokenSeq encode_pair(const TextVocab& vocab, const Prompt& prompt, const Image& img) {
    const std::array<int, kPromptWords> p = encode_prompt(vocab, prompt);
    TokenSeq seq;
    seq.ids.reserve(kSeqLen);
    seq.ids.push_back(vocab.bos());
    for (int w : p) seq.ids.push_back(w);
    seq.ids.push_back(vocab.sep());
    const std::vector<int> img_ids = quantize_image(img);
    for (int id : img_ids) seq.ids.push_back(id + vocab.size());
    return seq;
}

Image decode_image(const TextVocab& vocab, const TokenSeq& seq) {
    if ((int)seq.ids.size() != kSeqLen)
        throw std::invalid_argument("decode_image: sequence length " +
                                    std::to_string(seq.ids.size()) + " != " +
                                    std::to_string(kSeqLen));
    std::vector<int> img_ids;
    img_ids.reserve(kImageTokens);
    for (int i = 1 + kPromptWords + 1; i < kSeqLen; ++i)
        img_ids.push_back(seq.ids[(std::size_t)i] - vocab.size());
    return render_tokens(img_ids);
}

void write_token_dataset(const std::string& path, std::span<const TokenSeq> seqs) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("token dataset: cannot write " + path);
    const uint32_t count = (uint32_t)seqs.size();
    f.write((const char*)&count, 4);
    for (const TokenSeq& s : seqs) {
        const uint16_t len = (uint16_t)s.ids.size();
        f.write((const char*)&len, 2);
        for (int id : s.ids) {
            const uint16_t v = (uint16_t)id;
            f.write((const char*)&v, 2);
        }
    }
}

std::vector<TokenSeq> read_token_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("token dataset: cannot open " + path);
    uint32_t count = 0;
    f.read((char*)&count, 4);
    if (!f) throw std::runtime_error("token dataset: truncated header in " + path);
    std::vector<TokenSeq> out(count);
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t len = 0;
        f.read((char*)&len, 2);
        out[i].ids.resize(len);
        for (uint16_t j = 0; j < len; ++j) {
            uint16_t v = 0;
            f.read((char*)&v, 2);
            out[i].ids[j] = v;
        }
        if (!f) throw std::runtime_error("token dataset: truncated file " + path);
    }
    return out;
}

}  // namespace forge::codec
