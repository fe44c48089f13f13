// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Runs the built command-line tool and checks it agrees with the library.

#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "iadapt/langtree.hpp"
#include "iadapt/model.hpp"
#include "iadapt/synthdata.hpp"

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(IADAPT_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::filesystem::path write_tree(const fixture::TempDir& dir) {
    const auto path = dir.path / "tree.json";
    std::ofstream(path) << fixture::kFamilyJson;
    return path;
}

}  // namespace

TEST_CASE("tree sim and select print the library result") {
    fixture::TempDir dir("cli_tree");
    const auto tree = write_tree(dir);
    Run r = run("tree sim --tree " + tree.string() + " --lang ltz --targets eng,swe");
    CHECK(r.status == 0);
    CHECK(r.out == "4\n");
    r = run("tree select --tree " + tree.string() + " --targets eng,swe --m 2");
    CHECK(r.status == 0);
    CHECK(r.out == "ltz\nnbl\n");
}

TEST_CASE("errors exit non-zero") {
    fixture::TempDir dir("cli_err");
    const auto tree = write_tree(dir);
    CHECK(run("tree sim --tree " + tree.string() + " --lang zzz --targets eng").status != 0);
    CHECK(run("tree select --tree " + tree.string() + " --targets eng --m 9").status != 0);
    CHECK(run("tree sim --tree " + (dir.path / "missing.json").string() + " --lang eng --targets swe").status != 0);
}

TEST_CASE("datagen writes the same files the library writes") {
    fixture::TempDir dir("cli_data");
    const auto tree = write_tree(dir);
    const auto out = dir.path / "data";
    Run r = run("--seed 3 --out " + out.string() + " datagen --tree " + tree.string() + " --profile ten_min --languages eng,glv");
    REQUIRE(r.status == 0);
    const auto back = iadapt::synth::read_dataset(out);
    CHECK(back.languages.size() == 2);
    CHECK(back.at("eng").train.size() == 64);
    const auto nj = nlohmann::json::parse(r.out);
    CHECK(nj["command"] == "datagen");
}

TEST_CASE("eval computes corpus CER from label files") {
    fixture::TempDir dir("cli_eval");
    std::ofstream(dir.path / "ref.txt") << "1 2 3\n4 5\n";
    std::ofstream(dir.path / "hyp.txt") << "1 3\n4 5 6\n";
    Run r = run("eval --ref " + (dir.path / "ref.txt").string() + " --hyp " + (dir.path / "hyp.txt").string());
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["report"][0]["edits"] == 2);
    CHECK(j["report"][0]["ref_len"] == 5);
    CHECK(j["cer"].get<double>() == doctest::Approx(0.4));
}

TEST_CASE("eval on identical files reports zero") {
    fixture::TempDir dir("cli_eval0");
    std::ofstream(dir.path / "a.txt") << "1 2 3\n4 5\n";
    Run r = run("eval --ref " + (dir.path / "a.txt").string() + " --hyp " + (dir.path / "a.txt").string());
    REQUIRE(r.status == 0);
    CHECK(nlohmann::json::parse(r.out)["cer"].get<double>() == 0.0);
}

TEST_CASE("ia records its hyperparameters") {
    fixture::TempDir dir("cli_ia");
    const auto tree = write_tree(dir);
    const auto data = dir.path / "data";
    REQUIRE(run("--seed 2 --out " + data.string() + " datagen --tree " + tree.string() +
                " --profile ten_min --languages ltz,nbl").status == 0);
    const auto out = dir.path / "ia";
    Run r = run("--seed 2 --out " + out.string() + " ia --data " + data.string() +
                " --sources ltz,nbl --algorithm fomaml --alpha 0.001 --beta 0.0001 --inner-steps 1 --epochs 1");
    REQUIRE(r.status == 0);
    std::ifstream in(out / "run.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["adaptation"]["algorithm"] == "fomaml");
    CHECK(j["adaptation"]["alpha"].get<double>() == 0.001);
    CHECK(j["adaptation"]["beta"].get<double>() == 0.0001);
    CHECK(j["adaptation"]["inner_steps"] == 1);
    CHECK(std::filesystem::exists(out / "ia.log.csv"));
    const auto ck = iadapt::model::load_checkpoint(out / "post_ia.ckpt.json");
    CHECK(ck.phase == "post-IA");
}
