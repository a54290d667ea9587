#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "histreg/cli.hpp"
#include "histreg/io.hpp"

using namespace histreg;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "histreg");
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / "histreg-test-cli";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("usage errors") {
    const auto none = run({});
    CHECK(none.code == 1);
    CHECK(none.err.find("Usage") != std::string::npos);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"refine"}).code == 1);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("eval on identical landmarks") {
    const auto dir = scratch();
    io::write_landmarks_csv({{1, 2}, {30, 40}, {5.5, 6.5}}, dir / "lm.csv");
    const auto r = run({"eval", "--pred", (dir / "lm.csv").string(), "--truth", (dir / "lm.csv").string(),
                        "--width", "100", "--height", "80"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["aggregates"].size() == 6);
    for (const auto &[name, value] : j["aggregates"].items()) {
        CHECK(value.get<double>() == 0.0);
    }
}

TEST_CASE("refine on a bad row exits 2 with the line number") {
    const auto dir = scratch();
    io::write_text_file(dir / "bad.csv", "x_src,y_src,x_dst,y_dst\n1,2,3,4\n10,20,abc,21\n");
    const auto r = run({"refine", "--matches", (dir / "bad.csv").string(), "--out", (dir / "o.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("pipeline with a broken matcher exits 3") {
    const auto dir = scratch();
    io::write_image(ImageBuffer(ImageMeta{64, 64}, 1, 9), dir / "a.png");
    const auto r = run({"pipeline", "--moving", (dir / "a.png").string(), "--fixed", (dir / "a.png").string(),
                        "--matcher", "false", "--out", (dir / "p.csv").string()});
    CHECK(r.code == 3);
}

TEST_CASE("synth -> refine -> dvf -> transfer -> eval") {
    const auto dir = scratch() / "chain";
    fs::remove_all(dir);
    REQUIRE(run({"synth", "--out-dir", dir.string(), "--width", "300", "--height", "200", "--count", "300",
                 "--amplitude", "5", "--seed", "4"})
                .code == 0);
    CHECK(io::read_match_csv(dir / "matches.csv").size() == 300);
    const auto refine = run({"refine", "--matches", (dir / "matches.csv").string(), "--out",
                             (dir / "refined.csv").string(), "--width", "300", "--height", "200"});
    REQUIRE(refine.code == 0);
    const auto report = nlohmann::json::parse(refine.out);
    CHECK(report["merged"] == 300);
    REQUIRE(run({"dvf", "--matches", (dir / "refined.csv").string(), "--width", "300", "--height", "200",
                 "--out", (dir / "f.dvf").string()})
                .code == 0);
    REQUIRE(run({"transfer", "--landmarks", (dir / "landmarks_fixed.csv").string(), "--dvf",
                 (dir / "f.dvf").string(), "--out", (dir / "pred.csv").string()})
                .code == 0);
    const auto ev = run({"eval", "--pred", (dir / "pred.csv").string(), "--truth",
                         (dir / "landmarks_moving.csv").string(), "--width", "300", "--height", "200"});
    REQUIRE(ev.code == 0);
    CHECK(nlohmann::json::parse(ev.out)["aggregates"]["Median-Median"].get<double>() < 0.01);
}

TEST_CASE("image commands") {
    const auto dir = scratch() / "img";
    fs::remove_all(dir);
    REQUIRE(run({"synth", "--out-dir", dir.string(), "--width", "64", "--height", "48", "--kind",
                 "translation", "--count", "20", "--landmarks", "5", "--images"})
                .code == 0);
    REQUIRE(run({"warp", "--image", (dir / "moving.png").string(), "--dvf", (dir / "field.dvf").string(),
                 "--out", (dir / "warped.png").string()})
                .code == 0);
    REQUIRE(run({"checkerboard", "--a", (dir / "fixed.png").string(), "--b", (dir / "warped.png").string(),
                 "--tile", "8", "--out", (dir / "board.png").string()})
                .code == 0);
    REQUIRE(run({"overlay", "--image", (dir / "fixed.png").string(), "--pred",
                 (dir / "landmarks_fixed.csv").string(), "--truth", (dir / "landmarks_moving.csv").string(),
                 "--out", (dir / "overlay.png").string()})
                .code == 0);
    CHECK(io::read_image(dir / "overlay.png").channels == 3);
    CHECK(run({"warp", "--image", (dir / "missing.png").string(), "--dvf", (dir / "field.dvf").string(),
               "--out", (dir / "x.png").string()})
              .code == 2);
}
