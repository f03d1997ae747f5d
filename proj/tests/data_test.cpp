#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "bcnn/augment.hpp"
#include "bcnn/dataset.hpp"
#include "bcnn/error.hpp"
#include "bcnn/image.hpp"
#include "bcnn/synth.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace bcnn;
using namespace bcnn::test;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("bcnn_data_test_" + std::to_string(counter_++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    fs::path path() const { return path_; }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

Tensor quantized(const Tensor& image) {
    Tensor out = image;
    for (double& v : out.data()) {
        v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    }
    return out;
}

StereoSample constant_pair(const std::string& id, int label, double value, int h = 20,
                           int w = 24) {
    StereoSample s;
    s.pair_id = id;
    s.label = label;
    Tensor img({1, h, w, 3});
    for (double& v : img.data()) {
        v = value;
    }
    s.left_eye = img;
    s.right_eye = img;
    return s;
}

} // namespace

TEST(ImageIo, PpmRoundTrip) {
    TempDir dir;
    Rng rng(41);
    const Tensor image = quantized(uniform_tensor({1, 9, 7, 3}, rng, 0.0, 1.0));
    const std::string path = (dir.path() / "img.ppm").string();
    save_image(image, path);
    const Tensor loaded = load_image(path);
    ASSERT_EQ(loaded.shape(), image.shape());
    for (std::int64_t i = 0; i < image.size(); ++i) {
        ASSERT_NEAR(loaded.data()[i], image.data()[i], 0.5 / 255.0);
    }
}

TEST(ImageIo, PngRoundTrip) {
    TempDir dir;
    Rng rng(42);
    const Tensor image = quantized(uniform_tensor({1, 12, 5, 3}, rng, 0.0, 1.0));
    const std::string path = (dir.path() / "img.png").string();
    save_image(image, path);
    const Tensor loaded = load_image(path);
    ASSERT_EQ(loaded.shape(), image.shape());
    for (std::int64_t i = 0; i < image.size(); ++i) {
        ASSERT_NEAR(loaded.data()[i], image.data()[i], 0.5 / 255.0);
    }
}

TEST(ImageIo, Errors) {
    TempDir dir;
    EXPECT_THROW(load_image((dir.path() / "missing.png").string()), DataError);
    const std::string garbage = (dir.path() / "garbage.png").string();
    std::ofstream(garbage) << "not a png";
    EXPECT_THROW(load_image(garbage), DataError);
}

TEST(Resize, IdentityKeepsValues) {
    Rng rng(43);
    const Tensor image = uniform_tensor({1, 8, 6, 3}, rng, 0.0, 1.0);
    EXPECT_TRUE(resize_bilinear(image, 8, 6) == image);
}

TEST(Resize, CheckerboardCornersSurviveUpsampling) {
    Tensor board({1, 2, 2, 3});
    const double values[2][2] = {{0.0, 1.0}, {1.0, 0.0}};
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            for (int c = 0; c < 3; ++c) {
                board.at(0, y, x, c) = values[y][x];
            }
        }
    }
    const Tensor big = resize_bilinear(board, 4, 4);
    for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(big.at(0, 0, 0, c), 0.0);
        EXPECT_EQ(big.at(0, 0, 3, c), 1.0);
        EXPECT_EQ(big.at(0, 3, 0, c), 1.0);
        EXPECT_EQ(big.at(0, 3, 3, c), 0.0);
    }
}

TEST(Resize, PreservesValueRange) {
    Rng rng(44);
    const Tensor image = uniform_tensor({1, 15, 11, 3}, rng, 0.0, 1.0);
    for (const auto [h, w] : {std::pair{40, 30}, std::pair{7, 5}, std::pair{1, 1}}) {
        const Tensor resized = resize_bilinear(image, h, w);
        EXPECT_TRUE(resized.all_finite());
        for (double v : resized.data()) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
    }
}

TEST(Manifest, RoundTripAndLoading) {
    TempDir dir;
    Rng rng(45);
    // two 16x12 pairs on disk
    DatasetManifest manifest;
    manifest.classes = {"buildings", "others"};
    manifest.root = dir.path().string();
    for (int i = 0; i < 2; ++i) {
        const std::string left = "left_" + std::to_string(i) + ".ppm";
        const std::string right = "right_" + std::to_string(i) + ".ppm";
        save_image(uniform_tensor({1, 16, 12, 3}, rng, 0.0, 1.0), (dir.path() / left).string());
        save_image(uniform_tensor({1, 16, 12, 3}, rng, 0.0, 1.0), (dir.path() / right).string());
        manifest.entries.push_back(
            {"p" + std::to_string(i), i == 0 ? "buildings" : "others", left, right});
    }
    const std::string manifest_path = (dir.path() / "dataset.manifest").string();
    save_manifest(manifest, manifest_path);

    const DatasetManifest loaded = load_manifest(manifest_path);
    EXPECT_EQ(loaded.classes, manifest.classes);
    ASSERT_EQ(loaded.entries.size(), 2u);
    EXPECT_EQ(loaded.label_of("others"), 1);

    const auto samples = load_and_resize(loaded, 20, 14);
    ASSERT_EQ(samples.size(), 2u);
    EXPECT_EQ(samples[0].left_eye.shape(), (Shape{1, 20, 14, 3}));
    EXPECT_EQ(samples[0].label, 0);
    EXPECT_EQ(samples[1].label, 1);
}

TEST(Manifest, RejectsMalformedInputs) {
    TempDir dir;
    const std::string path = (dir.path() / "bad.manifest").string();
    std::ofstream(path) << "not a manifest\n";
    EXPECT_THROW(load_manifest(path), DataError);

    std::ofstream(path) << "bcnn-manifest v1\nclasses: a b\npair p0 a x.ppm y.ppm\n"
                        << "pair p0 b u.ppm v.ppm\n";
    EXPECT_THROW(load_manifest(path), DataError); // duplicate id

    std::ofstream(path) << "bcnn-manifest v1\nclasses: a b\npair p0 nope x.ppm y.ppm\n";
    EXPECT_THROW(load_manifest(path), DataError); // unknown class

    std::ofstream(path) << "bcnn-manifest v1\nclasses: a b\npair p0 a x.ppm y.ppm\n";
    const DatasetManifest manifest = load_manifest(path);
    EXPECT_THROW(load_and_resize(manifest, 8, 8), DataError); // missing file
}

TEST(Augment, HorizontalReflectIsInvolution) {
    Rng rng(46);
    const Tensor image = uniform_tensor({1, 6, 9, 3}, rng, 0.0, 1.0);
    EXPECT_TRUE(reflect_horizontal(reflect_horizontal(image)) == image);
    EXPECT_TRUE(reflect_vertical(reflect_vertical(image)) == image);
}

TEST(Augment, IdentityMagnitudesReproduceOriginal) {
    Rng rng(47);
    StereoSample pair;
    pair.pair_id = "p0";
    pair.label = 0;
    pair.left_eye = uniform_tensor({1, 10, 12, 3}, rng, 0.0, 1.0);
    pair.right_eye = uniform_tensor({1, 10, 12, 3}, rng, 0.0, 1.0);

    AugmentConfig config;
    config.noise_stddev = 0.0;
    config.rotation_max_degrees = 0.0;
    config.translation_max_pixels = 0;
    const auto variants = augment(pair, config);

    for (const StereoSample& v : variants) {
        if (v.pair_id == "p0#noise" || v.pair_id == "p0#rotate" || v.pair_id == "p0#shift") {
            EXPECT_TRUE(v.left_eye == pair.left_eye) << v.pair_id;
            EXPECT_TRUE(v.right_eye == pair.right_eye) << v.pair_id;
        }
    }
}

TEST(Augment, StereoConsistencyIdenticalParameters) {
    Rng rng(48);
    StereoSample pair;
    pair.pair_id = "p1";
    pair.label = 1;
    pair.left_eye = uniform_tensor({1, 16, 20, 3}, rng, 0.2, 0.8);
    pair.right_eye = pair.left_eye; // identical eyes isolate the parameters

    AugmentConfig config;
    config.translation_max_pixels = 2; // width 20: stay under the 10% bound
    const auto variants = augment(pair, config);
    ASSERT_EQ(variants.size(), 7u);
    for (const StereoSample& v : variants) {
        EXPECT_TRUE(v.left_eye == v.right_eye) << v.pair_id; // same transform both eyes
        EXPECT_EQ(v.label, 1);
    }
}

TEST(Augment, DeterministicPerPairRegardlessOfOrder) {
    Rng rng(49);
    StereoSample a;
    a.pair_id = "alpha";
    a.label = 0;
    a.left_eye = uniform_tensor({1, 10, 12, 3}, rng, 0.0, 1.0);
    a.right_eye = uniform_tensor({1, 10, 12, 3}, rng, 0.0, 1.0);
    StereoSample b = a;
    b.pair_id = "beta";

    AugmentConfig config;
    config.seed = 11;
    config.translation_max_pixels = 1;
    const auto ab = augment_dataset({a, b}, config);
    const auto ba = augment_dataset({b, a}, config);
    // find alpha's noise variant in both orders; they must match exactly
    auto find = [](const std::vector<StereoSample>& list, const std::string& id) {
        for (const StereoSample& s : list) {
            if (s.pair_id == id) {
                return s;
            }
        }
        throw std::runtime_error("missing " + id);
    };
    EXPECT_TRUE(find(ab, "alpha#noise").left_eye == find(ba, "alpha#noise").left_eye);
    EXPECT_TRUE(find(ab, "alpha#rotate").left_eye == find(ba, "alpha#rotate").left_eye);
    EXPECT_TRUE(find(ab, "beta#shift").left_eye == find(ba, "beta#shift").left_eye);
}

TEST(Augment, ReflectSwapsEyesWhenEnabled) {
    Rng rng(50);
    StereoSample pair;
    pair.pair_id = "p";
    pair.left_eye = uniform_tensor({1, 6, 8, 3}, rng, 0.0, 1.0);
    pair.right_eye = uniform_tensor({1, 6, 8, 3}, rng, 0.0, 1.0);

    AugmentConfig config;
    config.reflect_swaps_eyes = true;
    config.translation_max_pixels = 0;
    const auto variants = augment(pair, config);
    const StereoSample& hreflect = variants.front();
    ASSERT_EQ(hreflect.pair_id, "p#hreflect");
    EXPECT_TRUE(hreflect.left_eye == reflect_horizontal(pair.right_eye));
    EXPECT_TRUE(hreflect.right_eye == reflect_horizontal(pair.left_eye));
}

TEST(Split, ExactCountsAndDeterminism) {
    std::vector<StereoSample> pairs;
    for (int i = 0; i < 10; ++i) {
        pairs.push_back(constant_pair("p" + std::to_string(i), i % 2, i / 10.0));
    }
    const SplitPlan plan{0.6, 99};
    const SplitResult split = split_dataset(pairs, plan);
    EXPECT_EQ(split.train.size(), 6u);
    EXPECT_EQ(split.test.size(), 4u);

    // stratified: 3 train pairs per class
    int train_class0 = 0;
    for (const StereoSample& s : split.train) {
        train_class0 += s.label == 0 ? 1 : 0;
    }
    EXPECT_EQ(train_class0, 3);

    const SplitResult again = split_dataset(pairs, plan);
    ASSERT_EQ(again.train.size(), split.train.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        EXPECT_EQ(again.train[i].pair_id, split.train[i].pair_id);
    }
}

TEST(Split, AugmentedVariantsFollowTheirPair) {
    std::vector<StereoSample> pairs;
    for (int i = 0; i < 200; ++i) {
        pairs.push_back(constant_pair("p" + std::to_string(i), i % 2, (i % 97) / 97.0, 12, 16));
    }
    AugmentConfig config;
    config.seed = 3;
    config.translation_max_pixels = 1;
    const auto augmented = augment_dataset(pairs, config);
    ASSERT_EQ(augmented.size(), 200u * 8u);

    const SplitResult split = split_dataset(augmented, SplitPlan{0.6, 123});
    EXPECT_EQ(split.train.size(), 120u * 8u);
    EXPECT_EQ(split.test.size(), 80u * 8u);

    std::set<std::string> train_keys, test_keys;
    for (const StereoSample& s : split.train) {
        train_keys.insert(pair_key(s.pair_id));
    }
    for (const StereoSample& s : split.test) {
        test_keys.insert(pair_key(s.pair_id));
    }
    for (const std::string& key : train_keys) {
        EXPECT_FALSE(test_keys.contains(key)) << "pair " << key << " leaked across the split";
    }
    EXPECT_EQ(train_keys.size() + test_keys.size(), 200u);
}

TEST(Split, RejectsImpossiblePlans) {
    std::vector<StereoSample> pairs{constant_pair("a", 0, 0.1), constant_pair("b", 1, 0.2)};
    EXPECT_THROW(split_dataset(pairs, SplitPlan{0.6, 1}), DataError); // 1 pair per class
    EXPECT_THROW(split_dataset({}, SplitPlan{0.6, 1}), DataError);
    EXPECT_THROW(split_dataset(pairs, SplitPlan{0.0, 1}), ParamError);
    EXPECT_THROW(split_dataset(pairs, SplitPlan{1.0, 1}), ParamError);
}

TEST(Synth, DeterministicAndLabelled) {
    const auto a = synthesize_dataset(5, 77);
    const auto b = synthesize_dataset(5, 77);
    ASSERT_EQ(a.size(), 10u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].pair_id, b[i].pair_id);
        EXPECT_TRUE(a[i].left_eye == b[i].left_eye);
        EXPECT_TRUE(a[i].right_eye == b[i].right_eye);
    }
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a[i].label, 0);
        EXPECT_EQ(a[5 + i].label, 1);
    }
}

TEST(Synth, ZeroDisparityGivesIdenticalEyes) {
    SynthConfig config;
    config.max_disparity_fraction = 0.0;
    Rng rng(88);
    const auto pairs = synthesize_stereo(3, 0, rng, config);
    for (const StereoSample& s : pairs) {
        EXPECT_TRUE(s.left_eye == s.right_eye);
    }
}

TEST(Synth, NonzeroDisparityShiftsEyes) {
    SynthConfig config;
    config.max_disparity_fraction = 0.05;
    Rng rng(89);
    const auto pairs = synthesize_stereo(3, 0, rng, config);
    int differing = 0;
    for (const StereoSample& s : pairs) {
        if (!(s.left_eye == s.right_eye)) {
            ++differing;
        }
    }
    EXPECT_EQ(differing, 3);
}

TEST(Synth, ValuesInRange) {
    Rng rng(90);
    for (int class_id : {0, 1}) {
        const auto pairs = synthesize_stereo(4, class_id, rng);
        for (const StereoSample& s : pairs) {
            for (double v : s.left_eye.data()) {
                ASSERT_GE(v, 0.0);
                ASSERT_LE(v, 1.0);
            }
            EXPECT_TRUE(s.right_eye.all_finite());
        }
    }
}
