#include "forge/world.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace forge::world {

namespace {
constexpr double kPi = 3.14159265358979323846;

double level_val(int level) { return codec::palette_level_value(level); }

void put_level_pixel(Image& img, int y, int x, const std::array<int, 3>& levels) {
    img.at(y, x, 0) = level_val(levels[0]);
    img.at(y, x, 1) = level_val(levels[1]);
    img.at(y, x, 2) = level_val(levels[2]);
}

int lerp_level(int a, int b, double t) {
    const double v = a + (b - a) * t;
    int r = (int)std::lround(v);
    return r < 0 ? 0 : (r > 3 ? 3 : r);
}

// subject-frame membership test; (u, v) in pixels, hs = half-extent
bool shape_contains(ShapeKind s, double u, double v, double hs) {
    switch (s) {
        case ShapeKind::Circle: return u * u + v * v <= hs * hs;
        case ShapeKind::Square: return std::fabs(u) <= 0.82 * hs && std::fabs(v) <= 0.82 * hs;
        case ShapeKind::Triangle:
            return v >= -hs && v <= hs && std::fabs(u) <= (v + hs) * 0.5;
        case ShapeKind::Cross:
            return (std::fabs(u) <= 0.34 * hs && std::fabs(v) <= hs) ||
                   (std::fabs(v) <= 0.34 * hs && std::fabs(u) <= hs);
        case ShapeKind::Ring: {
            const double r2 = u * u + v * v;
            return r2 <= hs * hs && r2 >= 0.3 * hs * hs;
        }
        case ShapeKind::Diamond: return std::fabs(u) + std::fabs(v) <= hs;
    }
    return false;
}

bool pattern_secondary(PatternKind p, double u, double v, double hs) {
    switch (p) {
        case PatternKind::Solid: return false;
        case PatternKind::Stripes: {
            const double w = std::max(1.6, hs / 2.2);
            const long k = (long)std::floor((u + 64.0) / w);
            return (k & 1) != 0;
        }
        case PatternKind::Dots: {
            const double cell = std::max(2.0, hs / 1.6);
            const double um = u - cell * std::floor(u / cell) - cell * 0.5;
            const double vm = v - cell * std::floor(v / cell) - cell * 0.5;
            return um * um + vm * vm <= 0.16 * cell * cell;
        }
    }
    return false;
}

double subject_extent(const SubjectSpec& s, const Jitter& j, int size) {
    const double hs = s.nominal_size * size * 0.5 * j.scale;
    const double th = std::fabs(j.rot_deg) * kPi / 180.0;
    return hs * (std::cos(th) + std::sin(th));
}

// per-context deterministic texture hash (stable across renders)
bool noise_pick(int context_id, int y, int x) {
    return (mix64(((uint64_t)context_id << 32) ^ ((uint64_t)y << 16) ^ (uint64_t)x) & 1) != 0;
}

void draw_accessory(Image& img, const ContextSpec& ctx, int size) {
    if (!ctx.accessory) return;
    const AccessorySpec& acc = *ctx.accessory;
    switch (acc.kind) {
        case AccessorySpec::Kind::Dots:
            // sparse deterministic dot field (star-field style)
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    if ((mix64(((uint64_t)ctx.context_id << 40) ^ ((uint64_t)y << 20) ^
                               (uint64_t)x) % 11) == 0)
                        put_level_pixel(img, y, x, acc.color_levels);
            break;
        case AccessorySpec::Kind::Bar:
            for (int x = 0; x < size; ++x) put_level_pixel(img, size - 2, x, acc.color_levels);
            break;
        case AccessorySpec::Kind::Disc:
            for (int y = 0; y < 3; ++y)
                for (int x = size - 4; x < size - 1; ++x)
                    if ((y - 1) * (y - 1) + (x - (size - 3)) * (x - (size - 3)) <= 2)
                        put_level_pixel(img, y, x, acc.color_levels);
            break;
    }
}

}  // namespace

const char* shape_name(ShapeKind s) {
    switch (s) {
        case ShapeKind::Circle: return "circle";
        case ShapeKind::Square: return "square";
        case ShapeKind::Triangle: return "triangle";
        case ShapeKind::Cross: return "cross";
        case ShapeKind::Ring: return "ring";
        case ShapeKind::Diamond: return "diamond";
    }
    return "?";
}

const char* pattern_name(PatternKind p) {
    switch (p) {
        case PatternKind::Solid: return "solid";
        case PatternKind::Stripes: return "stripes";
        case PatternKind::Dots: return "dots";
    }
    return "?";
}

const char* texture_name(TextureKind t) {
    switch (t) {
        case TextureKind::Flat: return "flat";
        case TextureKind::GradientV: return "gradient_v";
        case TextureKind::GradientH: return "gradient_h";
        case TextureKind::Checker: return "checker";
        case TextureKind::Noise: return "noise";
    }
    return "?";
}

std::array<int, 3> SubjectSpec::secondary_levels() const {
    return {(color_levels[0] + 2) % 4, (color_levels[1] + 2) % 4, (color_levels[2] + 2) % 4};
}

SubjectSpec sample_subject(uint64_t seed) {
    Rng rng(seed);
    SubjectSpec s;
    s.shape = (ShapeKind)rng.next_below(kShapeKinds);
    s.color_levels = {(int)rng.next_below(4), (int)rng.next_below(4), (int)rng.next_below(4)};
    s.pattern = (PatternKind)rng.next_below(kPatternKinds);
    s.nominal_size = rng.uniform(0.3, 0.6);
    const int color_idx =
        codec::palette_index(s.color_levels[0], s.color_levels[1], s.color_levels[2]);
    s.subject_id = ((int)s.shape * codec::kPaletteSize + color_idx) * kPatternKinds + (int)s.pattern;
    return s;
}

std::vector<SubjectSpec> sample_subjects(uint64_t seed, int n) {
    std::vector<SubjectSpec> out;
    std::set<int> taken;
    for (int i = 0; i < n; ++i) {
        for (uint64_t attempt = 0;; ++attempt) {
            SubjectSpec s = sample_subject(derive_seed(seed, (uint64_t)i, attempt));
            if (!taken.count(s.subject_id)) {
                taken.insert(s.subject_id);
                out.push_back(s);
                break;
            }
            if (attempt > 10000)
                throw std::runtime_error("sample_subjects: rejection loop stuck");
        }
    }
    return out;
}

std::vector<ContextSpec> default_contexts() {
    auto dots = [](int r, int g, int b) {
        AccessorySpec a;
        a.kind = AccessorySpec::Kind::Dots;
        a.color_levels = {r, g, b};
        return a;
    };
    auto bar = [](int r, int g, int b) {
        AccessorySpec a;
        a.kind = AccessorySpec::Kind::Bar;
        a.color_levels = {r, g, b};
        return a;
    };
    auto disc = [](int r, int g, int b) {
        AccessorySpec a;
        a.kind = AccessorySpec::Kind::Disc;
        a.color_levels = {r, g, b};
        return a;
    };

    std::vector<ContextSpec> out;
    auto add = [&](const char* token, std::array<int, 3> base, TextureKind tex,
                   std::array<int, 3> alt, int block, std::optional<AccessorySpec> acc,
                   bool reference) {
        ContextSpec c;
        c.context_id = (int)out.size();
        c.name_token = token;
        c.base_levels = base;
        c.texture = tex;
        c.alt_levels = alt;
        c.checker_block = block;
        c.accessory = std::move(acc);
        c.reference = reference;
        out.push_back(std::move(c));
    };

    // 25 eval contexts
    add("on_grass", {0, 2, 0}, TextureKind::Noise, {0, 3, 0}, 4, std::nullopt, false);
    add("on_snow", {3, 3, 3}, TextureKind::Flat, {3, 3, 3}, 4, std::nullopt, false);
    add("on_sand", {3, 3, 1}, TextureKind::Noise, {2, 2, 1}, 4, std::nullopt, false);
    add("on_lava", {3, 1, 0}, TextureKind::Noise, {2, 0, 0}, 4, std::nullopt, false);
    add("underwater", {0, 1, 3}, TextureKind::GradientV, {0, 0, 2}, 4, std::nullopt, false);
    add("in_forest", {0, 2, 0}, TextureKind::Checker, {0, 1, 0}, 4, std::nullopt, false);
    add("in_cave", {1, 1, 1}, TextureKind::GradientV, {0, 0, 0}, 4, std::nullopt, false);
    add("at_night", {0, 0, 1}, TextureKind::Flat, {0, 0, 1}, 4, dots(3, 3, 3), false);
    add("at_sunset", {3, 1, 0}, TextureKind::GradientV, {2, 0, 1}, 4, disc(3, 2, 0), false);
    add("at_dawn", {3, 2, 1}, TextureKind::GradientV, {1, 1, 2}, 4, std::nullopt, false);
    add("on_checkerboard", {3, 3, 3}, TextureKind::Checker, {0, 0, 0}, 4, std::nullopt, false);
    add("on_bricks", {2, 1, 0}, TextureKind::Checker, {1, 0, 0}, 2, std::nullopt, false);
    add("on_carpet", {2, 0, 2}, TextureKind::Noise, {1, 0, 1}, 4, std::nullopt, false);
    add("in_fog", {2, 2, 2}, TextureKind::Flat, {2, 2, 2}, 4, std::nullopt, false);
    add("on_ice", {2, 3, 3}, TextureKind::GradientH, {1, 2, 3}, 4, std::nullopt, false);
    add("on_dirt", {2, 1, 0}, TextureKind::Noise, {1, 1, 0}, 4, std::nullopt, false);
    add("on_stone", {2, 2, 2}, TextureKind::Noise, {1, 1, 1}, 4, std::nullopt, false);
    add("in_meadow", {0, 2, 0}, TextureKind::Noise, {2, 3, 0}, 4, std::nullopt, false);
    add("on_metal", {2, 2, 3}, TextureKind::GradientH, {1, 1, 2}, 4, std::nullopt, false);
    add("on_wood", {2, 1, 0}, TextureKind::GradientH, {1, 0, 0}, 4, std::nullopt, false);
    add("in_rain", {1, 1, 2}, TextureKind::GradientV, {2, 2, 3}, 4, std::nullopt, false);
    add("under_stars", {0, 0, 0}, TextureKind::Flat, {0, 0, 0}, 4, dots(3, 3, 2), false);
    add("on_tiles", {3, 3, 2}, TextureKind::Checker, {2, 2, 1}, 2, std::nullopt, false);
    add("in_garden", {0, 2, 0}, TextureKind::Checker, {3, 0, 1}, 2, std::nullopt, false);
    add("on_road", {1, 1, 1}, TextureKind::Flat, {1, 1, 1}, 4, bar(3, 3, 0), false);
    // 2 reference contexts (never in eval prompts)
    add("in_studio", {3, 3, 3}, TextureKind::GradientV, {2, 2, 2}, 4, std::nullopt, true);
    add("on_desk", {2, 1, 0}, TextureKind::Flat, {2, 1, 0}, 4, std::nullopt, true);

    return out;
}

Jitter sample_jitter(Rng& rng, const SubjectSpec& subject) {
    const int size = codec::kImageSide;
    const double max_off = 0.15 * size;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Jitter j;
        j.dx = rng.uniform(-max_off, max_off);
        j.dy = rng.uniform(-max_off, max_off);
        j.scale = rng.uniform(0.9, 1.1);
        j.rot_deg = rng.uniform(-10.0, 10.0);
        const double ext = subject_extent(subject, j, size);
        const double c = size * 0.5;
        if (std::fabs(j.dx) + ext <= c && std::fabs(j.dy) + ext <= c) return j;
    }
    throw std::runtime_error("sample_jitter: no in-bounds jitter found for subject size " +
                             std::to_string(subject.nominal_size));
}

Image render_background(const ContextSpec& ctx, int size) {
    Image img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            std::array<int, 3> levels = ctx.base_levels;
            switch (ctx.texture) {
                case TextureKind::Flat: break;
                case TextureKind::GradientV: {
                    const double t = size > 1 ? (double)y / (size - 1) : 0.0;
                    for (int c = 0; c < 3; ++c)
                        levels[(std::size_t)c] = lerp_level(ctx.base_levels[(std::size_t)c],
                                                            ctx.alt_levels[(std::size_t)c], t);
                    break;
                }
                case TextureKind::GradientH: {
                    const double t = size > 1 ? (double)x / (size - 1) : 0.0;
                    for (int c = 0; c < 3; ++c)
                        levels[(std::size_t)c] = lerp_level(ctx.base_levels[(std::size_t)c],
                                                            ctx.alt_levels[(std::size_t)c], t);
                    break;
                }
                case TextureKind::Checker:
                    if (((y / ctx.checker_block) + (x / ctx.checker_block)) % 2 == 1)
                        levels = ctx.alt_levels;
                    break;
                case TextureKind::Noise:
                    if (noise_pick(ctx.context_id, y, x)) levels = ctx.alt_levels;
                    break;
            }
            put_level_pixel(img, y, x, levels);
        }
    }
    draw_accessory(img, ctx, size);
    return img;
}

namespace {

void draw_subject(Image& img, const SubjectSpec& s, const Jitter& j, int size) {
    const double hs = s.nominal_size * size * 0.5 * j.scale;
    const double cx = size * 0.5 + j.dx;
    const double cy = size * 0.5 + j.dy;
    const double th = j.rot_deg * kPi / 180.0;
    const double ct = std::cos(th), st = std::sin(th);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double px = x + 0.5 - cx;
            const double py = y + 0.5 - cy;
            const double u = ct * px + st * py;   // rotate into subject frame
            const double v = -st * px + ct * py;
            if (!shape_contains(s.shape, u, v, hs)) continue;
            put_level_pixel(img, y, x,
                            pattern_secondary(s.pattern, u, v, hs) ? s.secondary_levels()
                                                                   : s.color_levels);
        }
    }
}

}  // namespace

Image render_scene(const Scene& scene, int size) {
    const double ext = subject_extent(scene.subject, scene.jitter, size);
    const double c = size * 0.5;
    if (std::fabs(scene.jitter.dx) + ext > c || std::fabs(scene.jitter.dy) + ext > c)
        throw std::invalid_argument("render_scene: jittered subject leaves the image (extent " +
                                    std::to_string(ext) + ", offset " +
                                    std::to_string(scene.jitter.dx) + "," +
                                    std::to_string(scene.jitter.dy) + ")");
    Image img = render_background(scene.context, size);
    draw_subject(img, scene.subject, scene.jitter, size);
    return img;
}

Image render_subject_on_neutral(const SubjectSpec& subject, const Jitter& jitter, int size) {
    std::array<int, 3> neutral = {2, 2, 2};
    if (subject.color_levels == neutral) neutral = {1, 1, 1};
    Image img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) put_level_pixel(img, y, x, neutral);
    draw_subject(img, subject, jitter, size);
    return img;
}

std::vector<uint8_t> subject_mask(const SubjectSpec& subject, const Jitter& jitter, int size) {
    const double hs = subject.nominal_size * size * 0.5 * jitter.scale;
    const double cx = size * 0.5 + jitter.dx;
    const double cy = size * 0.5 + jitter.dy;
    const double th = jitter.rot_deg * kPi / 180.0;
    const double ct = std::cos(th), st = std::sin(th);
    std::vector<uint8_t> mask((std::size_t)size * size, 0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double px = x + 0.5 - cx;
            const double py = y + 0.5 - cy;
            const double u = ct * px + st * py;
            const double v = -st * px + ct * py;
            if (shape_contains(subject.shape, u, v, hs))
                mask[(std::size_t)(y * size + x)] = 1;
        }
    return mask;
}

const ContextSpec& World::context_by_token(const std::string& token) const {
    for (const ContextSpec& c : contexts)
        if (c.name_token == token) return c;
    throw std::invalid_argument("world: unknown context token " + token);
}

std::vector<std::string> World::context_tokens() const {
    std::vector<std::string> out;
    for (const ContextSpec& c : contexts) out.push_back(c.name_token);
    return out;
}

std::vector<const ContextSpec*> World::eval_contexts() const {
    std::vector<const ContextSpec*> out;
    for (const ContextSpec& c : contexts)
        if (!c.reference) out.push_back(&c);
    return out;
}

std::vector<const ContextSpec*> World::reference_contexts() const {
    std::vector<const ContextSpec*> out;
    for (const ContextSpec& c : contexts)
        if (c.reference) out.push_back(&c);
    return out;
}

World build_world(uint64_t seed, int n_subjects) {
    if (n_subjects < 1 || n_subjects > codec::TextVocab::kSubjectSlots)
        throw std::invalid_argument("build_world: subject count " + std::to_string(n_subjects) +
                                    " not in [1," +
                                    std::to_string(codec::TextVocab::kSubjectSlots) + "]");
    World w;
    w.seed = seed;
    w.subjects = sample_subjects(derive_seed(seed, 0x5007ull), n_subjects);
    w.contexts = default_contexts();
    return w;
}

std::vector<std::pair<Image, Prompt>> make_reference_set(const World& w, int subject_index,
                                                         int k, uint64_t seed) {
    if (k < 1) throw std::invalid_argument("make_reference_set: k must be >= 1");
    const SubjectSpec& subject = w.subjects.at((std::size_t)subject_index);
    const std::vector<const ContextSpec*> refs = w.reference_contexts();
    const std::string token = "S*_" + std::to_string(w.subject_slot(subject_index));
    std::vector<std::pair<Image, Prompt>> out;
    for (int i = 0; i < k; ++i) {
        Rng rng(derive_seed(seed, (uint64_t)subject.subject_id, (uint64_t)i));
        const ContextSpec& ctx = *refs[(std::size_t)(i % refs.size())];
        Scene scene{subject, ctx, sample_jitter(rng, subject)};
        out.emplace_back(render_scene(scene), Prompt{token, ctx.name_token});
    }
    return out;
}

std::vector<Prompt> make_eval_prompts(const World& w, int subject_index) {
    const std::vector<const ContextSpec*> evals = w.eval_contexts();
    if ((int)evals.size() < kEvalContexts)
        throw std::invalid_argument("make_eval_prompts: need at least 25 eval contexts, have " +
                                    std::to_string(evals.size()));
    const std::string token = "S*_" + std::to_string(w.subject_slot(subject_index));
    std::vector<Prompt> out;
    for (int i = 0; i < kEvalContexts; ++i)
        out.push_back(Prompt{token, evals[(std::size_t)i]->name_token});
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.w - 1 - x, c);
    return out;
}

Image flip_vertical(const Image& img) {
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(img.h - 1 - y, x, c);
    return out;
}

Image rotate_nn(const Image& img, double degrees) {
    const double th = degrees * kPi / 180.0;
    const double ct = std::cos(th), st = std::sin(th);
    const double cx = img.w * 0.5, cy = img.h * 0.5;
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const double px = x + 0.5 - cx;
            const double py = y + 0.5 - cy;
            // inverse rotation into source coordinates
            const double sx = ct * px + st * py + cx;
            const double sy = -st * px + ct * py + cy;
            int ix = (int)std::floor(sx);
            int iy = (int)std::floor(sy);
            ix = ix < 0 ? 0 : (ix >= img.w ? img.w - 1 : ix);
            iy = iy < 0 ? 0 : (iy >= img.h ? img.h - 1 : iy);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(iy, ix, c);
        }
    return out;
}

Image crop_resize_nn(const Image& img, double scale, double ox_frac, double oy_frac) {
    const double cw = img.w * scale, ch = img.h * scale;
    const double ox = (img.w - cw) * ox_frac, oy = (img.h - ch) * oy_frac;
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            int ix = (int)std::floor(ox + (x + 0.5) * cw / img.w);
            int iy = (int)std::floor(oy + (y + 0.5) * ch / img.h);
            ix = ix < 0 ? 0 : (ix >= img.w ? img.w - 1 : ix);
            iy = iy < 0 ? 0 : (iy >= img.h ? img.h - 1 : iy);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(iy, ix, c);
        }
    return out;
}

Image augment(const Image& img, uint64_t seed) {
    Rng rng(seed);
    Image out = img;
    if (rng.next_double() < 0.05) out = flip_horizontal(out);
    if (rng.next_double() < 0.05) out = flip_vertical(out);
    out = rotate_nn(out, rng.uniform(-5.0, 5.0));
    out = crop_resize_nn(out, rng.uniform(0.9, 1.0), rng.next_double(), rng.next_double());
    return out;
}

}  // namespace forge::world
