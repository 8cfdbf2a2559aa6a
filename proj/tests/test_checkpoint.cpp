#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "evsv/nn/checkpoint.hpp"

using namespace evsv;
using namespace evsv::nn;

TEST_CASE("checkpoint round trip preserves blocks and hash") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "evsv_ckpt_test";
    fs::create_directories(dir);
    const auto path = (dir / "model.evck").string();

    SeededRng rng(77);
    Checkpoint ckpt;
    Tensor w{{3, 5}};
    w.randomize_uniform(rng, -2, 2);
    Tensor b{{5}};
    b.randomize_uniform(rng, -1, 1);
    ckpt.add("layer0.weight", w);
    ckpt.add("layer0.bias", b);

    save_checkpoint(path, ckpt);
    auto loaded = load_checkpoint(path);
    REQUIRE(loaded.blocks.size() == 2);
    CHECK(loaded.blocks[0].first == "layer0.weight");
    CHECK(loaded.get("layer0.weight").shape == w.shape);
    CHECK(loaded.get("layer0.weight").data == w.data);
    CHECK(loaded.get("layer0.bias").data == b.data);

    CHECK(checkpoint_hash(ckpt) == checkpoint_hash(loaded));
    CHECK(checkpoint_hash(ckpt).size() == 64);

    // same content re-saved is byte-identical
    const auto path2 = (dir / "model2.evck").string();
    save_checkpoint(path2, loaded);
    CHECK(sha256_file_hex(path) == sha256_file_hex(path2));

    fs::remove_all(dir);
}

TEST_CASE("corrupted checkpoint is rejected") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "evsv_ckpt_bad";
    fs::create_directories(dir);
    const auto path = (dir / "model.evck").string();

    Checkpoint ckpt;
    Tensor w{{4}};
    w[0] = 1.5;
    ckpt.add("w", w);
    save_checkpoint(path, ckpt);

    // flip one payload byte
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(12);
    char c;
    f.read(&c, 1);
    f.seekp(12);
    c = static_cast<char>(c ^ 0x1);
    f.write(&c, 1);
    f.close();

    CHECK_THROWS_WITH(load_checkpoint(path),
                      Catch::Matchers::ContainsSubstring("hash mismatch"));
    fs::remove_all(dir);
}

TEST_CASE("hash changes when parameters change") {
    Checkpoint a, b;
    Tensor w{{2, 2}};
    a.add("w", w);
    w[3] = 1e-9;
    b.add("w", w);
    CHECK(checkpoint_hash(a) != checkpoint_hash(b));
}
