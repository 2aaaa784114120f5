#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "forge/codec.hpp"
#include "forge/image.hpp"
#include "forge/rng.hpp"

namespace forge::world {

using codec::Prompt;

enum class ShapeKind { Circle, Square, Triangle, Cross, Ring, Diamond };
enum class PatternKind { Solid, Stripes, Dots };
enum class TextureKind { Flat, GradientV, GradientH, Checker, Noise };

inline constexpr int kShapeKinds = 6;
inline constexpr int kPatternKinds = 3;
inline constexpr int kEvalContexts = 25;
inline constexpr int kReferenceContexts = 2;
inline constexpr int kDefaultSubjects = 9;
inline constexpr int kDefaultRefImages = 4;

const char* shape_name(ShapeKind s);
const char* pattern_name(PatternKind p);
const char* texture_name(TextureKind t);

struct SubjectSpec {
    int subject_id = 0;  // encodes (shape, color, pattern); equal triples <=> equal ids
    ShapeKind shape = ShapeKind::Circle;
    std::array<int, 3> color_levels = {0, 0, 0};  // palette levels, 0..3 per channel
    PatternKind pattern = PatternKind::Solid;
    double nominal_size = 0.45;  // fraction of the image side, in [0.3, 0.6]

    // stripes/dots use a derived second color: (level + 2) mod 4 per channel
    std::array<int, 3> secondary_levels() const;
};

struct AccessorySpec {
    // small fixed marker drawn into the background (e.g. star field dots)
    enum class Kind { Dots, Bar, Disc };
    Kind kind = Kind::Dots;
    std::array<int, 3> color_levels = {3, 3, 3};
};

struct ContextSpec {
    int context_id = 0;
    std::string name_token;
    std::array<int, 3> base_levels = {0, 0, 0};
    TextureKind texture = TextureKind::Flat;
    std::array<int, 3> alt_levels = {0, 0, 0};  // second color for gradient/checker/noise
    int checker_block = 4;
    std::optional<AccessorySpec> accessory;
    bool reference = false;  // reference contexts never appear in eval prompts
};

struct Jitter {
    double dx = 0.0, dy = 0.0;   // pixel offsets, |.| <= 15% of the side
    double scale = 1.0;          // in [0.9, 1.1]
    double rot_deg = 0.0;        // in [-10, 10]
};

struct Scene {
    SubjectSpec subject;
    ContextSpec context;
    Jitter jitter;
};

// deterministic subject draw; identity = (shape, color, pattern)
SubjectSpec sample_subject(uint64_t seed);

// n pairwise-distinct subjects via rejection on the identity triple
std::vector<SubjectSpec> sample_subjects(uint64_t seed, int n);

// the fixed 27-context table: 25 eval contexts then 2 reference contexts
std::vector<ContextSpec> default_contexts();

// in-bounds jitter for this subject (rejection sampling)
Jitter sample_jitter(Rng& rng, const SubjectSpec& subject);

// deterministic palette-exact render; throws if the jittered subject's
// bounding box leaves the image
Image render_scene(const Scene& scene, int size = codec::kImageSide);
Image render_background(const ContextSpec& ctx, int size = codec::kImageSide);

// subject on a neutral flat background (used by the identity oracle);
// the neutral gray avoids the subject's own base color
Image render_subject_on_neutral(const SubjectSpec& subject, const Jitter& jitter,
                                int size = codec::kImageSide);

// true where the subject covers the pixel (same geometry as render_scene)
std::vector<uint8_t> subject_mask(const SubjectSpec& subject, const Jitter& jitter,
                                  int size = codec::kImageSide);

struct World {
    uint64_t seed = 0;
    std::vector<SubjectSpec> subjects;
    std::vector<ContextSpec> contexts;  // eval contexts first, then reference

    const ContextSpec& context_by_token(const std::string& token) const;
    std::vector<std::string> context_tokens() const;
    std::vector<const ContextSpec*> eval_contexts() const;
    std::vector<const ContextSpec*> reference_contexts() const;
    int subject_slot(int subject_index) const { return subject_index + 1; }  // 1-based S*_k
};

World build_world(uint64_t seed, int n_subjects = kDefaultSubjects);

// k reference images of one subject in the reference contexts, prompts use
// the subject's bound token
std::vector<std::pair<Image, Prompt>> make_reference_set(const World& w, int subject_index,
                                                         int k, uint64_t seed);

// 25 eval prompts "a S*_k <context>" in fixed context order
std::vector<Prompt> make_eval_prompts(const World& w, int subject_index);

// horizontal flip p=0.05, vertical flip p=0.05, rotation U[-5,5] degrees
// (nearest neighbor), crop scale U[0.9,1.0] resized back, in that order
Image augment(const Image& img, uint64_t seed);

// building blocks of augment, exposed so the branches are testable
Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);
Image rotate_nn(const Image& img, double degrees);
Image crop_resize_nn(const Image& img, double scale, double ox_frac, double oy_frac);

}  // namespace forge::world
