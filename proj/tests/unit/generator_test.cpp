// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "leti/error.hpp"
#include "leti/fcft.hpp"
#include "leti/generator.hpp"
#include "leti/tokenizer.hpp"
#include "test_support.hpp"

namespace leti {
namespace {

using nlohmann::json;

SampleRequest request(std::string prompt, int n, std::optional<std::string> condition = std::nullopt,
                      double temperature = 1.0, std::uint64_t seed = 0) {
    SampleRequest r;
    r.prompt = std::move(prompt);
    r.n = n;
    r.condition = std::move(condition);
    r.temperature = temperature;
    r.seed = seed;
    return r;
}

// ------------------------------------------------------------------- mock

TEST(MockGeneratorTest, TableLookup) {
    MockGenerator g;
    g.add("p", "any", {"a", "b"});
    EXPECT_EQ(g.sample(request("p", 2)), (std::vector<std::string>{"a", "b"}));
}

TEST(MockGeneratorTest, CompletionsCycle) {
    MockGenerator g;
    g.add("p", "any", {"a", "b"});
    EXPECT_EQ(g.sample(request("p", 5)), (std::vector<std::string>{"a", "b", "a", "b", "a"}));
}

TEST(MockGeneratorTest, ExactConditionWinsOverAny) {
    MockGenerator g;
    g.add("p", "any", {"plain"});
    g.add("p", "<|good|>", {"good"});
    EXPECT_EQ(g.sample(request("p", 1, "<|good|>")), (std::vector<std::string>{"good"}));
    EXPECT_EQ(g.sample(request("p", 1, "<|bad|>")), (std::vector<std::string>{"plain"}));
    EXPECT_EQ(g.sample(request("p", 1)), (std::vector<std::string>{"plain"}));
}

TEST(MockGeneratorTest, UnknownPromptIsAnError) {
    MockGenerator g;
    g.add("p", "any", {"a"});
    EXPECT_THROW(g.sample(request("q", 1)), ValidationError);
}

TEST(MockGeneratorTest, RequestValidation) {
    MockGenerator g;
    g.add("p", "any", {"a"});
    EXPECT_THROW(g.sample(request("p", 0)), ValidationError);
    EXPECT_THROW(g.sample(request("p", 1, std::nullopt, -0.5)), ValidationError);
    EXPECT_THROW(g.sample(request("p", 1, "<|sol|>")), ValidationError);
}

TEST(MockGeneratorTest, FromJson) {
    const auto g = MockGenerator::from_json(json::parse(R"([
        {"prompt": "p", "completions": ["x"]},
        {"prompt": "p", "condition": "<|good|>", "completions": ["y"]}])"));
    EXPECT_EQ(g.sample(request("p", 1, "<|good|>")).front(), "y");
    EXPECT_EQ(g.sample(request("p", 1)).front(), "x");
    EXPECT_THROW(MockGenerator::from_json(json::object()), ParseError);
    EXPECT_THROW(MockGenerator::from_json(json::parse(R"([{"prompt": "p", "completions": []}])")), ValidationError);
    EXPECT_THROW(MockGenerator::from_json(json::parse(R"([{"prompt": 3}])")), ParseError);
}

TEST(MockGeneratorTest, CompletionsAreCapped) {
    MockGenerator g(3);
    g.add("p", "any", {"a b c d e", "x<|good|>y"});
    EXPECT_EQ(g.sample(request("p", 2)), (std::vector<std::string>{"a b", "x"}));
}

TEST(CapCompletionTest, CutsAtLiteralThenTokenCap) {
    EXPECT_EQ(cap_completion("abc<|sol|>def", 10), "abc");
    EXPECT_EQ(cap_completion("1 + 2 + 3", 3), "1 +");
    EXPECT_EQ(cap_completion("", 3), "");
}

TEST(ConditionedPrefixTest, ConditionIsPrependedOnce) {
    EXPECT_EQ(conditioned_prefix(request("do x", 1, "<|good|>")), "<|good|>do x<|sol|>");
    EXPECT_EQ(conditioned_prefix(request("do x", 1)), "do x<|sol|>");
}

// ---------------------------------------------------------------- trigram

TrigramGenerator small_trigram(int max_new_tokens = 8) {
    TrigramState s(0.01);
    s.fit(std::vector<std::string>{"<|good|>p<|sol|>1+x", "<|good|>p<|sol|>2+x", "p<|sol|>3*x", "p<|sol|>4-y"}, 1);
    return TrigramGenerator(std::move(s), max_new_tokens);
}

TEST(TrigramGeneratorTest, BitReproducibleWithFixedSeed) {
    const auto g = small_trigram();
    EXPECT_EQ(g.sample(request("p", 16, "<|good|>", 1.0, 42)), g.sample(request("p", 16, "<|good|>", 1.0, 42)));
}

TEST(TrigramGeneratorTest, SamplesDoNotDependOnN) {
    const auto g = small_trigram();
    const auto four = g.sample(request("p", 4, std::nullopt, 1.0, 9));
    const auto eight = g.sample(request("p", 8, std::nullopt, 1.0, 9));
    EXPECT_TRUE(std::equal(four.begin(), four.end(), eight.begin()));
}

TEST(TrigramGeneratorTest, TemperatureZeroIsGreedyAcrossCalls) {
    const auto g = small_trigram();
    const auto a = g.sample(request("p", 3, "<|good|>", 0.0, 1));
    const auto b = g.sample(request("p", 3, "<|good|>", 0.0, 777));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a[0], a[1]);
    EXPECT_EQ(a[0], "1+x");
}

TEST(TrigramGeneratorTest, ExactlyNCompletionsWithinTheTokenCap) {
    const auto g = small_trigram(2);
    const auto out = g.sample(request("p", 32, std::nullopt, 2.0, 3));
    ASSERT_EQ(out.size(), 32u);
    for (const auto& c : out) EXPECT_LE(tokenize(c).size(), 2u);
}

TEST(TrigramGeneratorTest, ConditionChangesTheDistribution) {
    const auto g = small_trigram();
    int good_style = 0;
    for (const auto& c : g.sample(request("p", 200, "<|good|>", 1.0, 5))) {
        good_style += c.find("+x") != std::string::npos ? 1 : 0;
    }
    EXPECT_GT(good_style, 100);
}

// ----------------------------------------------------------------- remote

class FakeEndpoint {
public:
    FakeEndpoint() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }
    httplib::Server& server() { return server_; }
    std::string url(const std::string& path = "/generate") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

GeneratorSpec remote_spec(const std::string& url, int retries = 2) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::Remote;
    spec.endpoint = url;
    spec.retries = retries;
    spec.timeout = 5.0;
    spec.max_new_tokens = 16;
    spec.stop = {"\ndef"};
    return spec;
}

TEST(RemoteGeneratorTest, PostsTheDocumentedBody) {
    FakeEndpoint endpoint;
    json seen;
    endpoint.server().Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        const int n = seen.at("n");
        json completions = json::array();
        for (int i = 0; i < n; ++i) completions.push_back("c" + std::to_string(i));
        res.set_content(json{{"completions", completions}}.dump(), "application/json");
    });
    RemoteGenerator g(remote_spec(endpoint.url()));
    EXPECT_EQ(g.sample(request("task", 3, "<|good|>", 0.7)), (std::vector<std::string>{"c0", "c1", "c2"}));
    EXPECT_EQ(seen.at("prompt"), "<|good|>task<|sol|>");
    EXPECT_EQ(seen.at("n"), 3);
    EXPECT_DOUBLE_EQ(seen.at("temperature").get<double>(), 0.7);
    EXPECT_EQ(seen.at("max_new_tokens"), 16);
    EXPECT_EQ(seen.at("stop"), json::array({"\ndef"}));
}

TEST(RemoteGeneratorTest, ServerErrorsAreRetried) {
    FakeEndpoint endpoint;
    std::atomic<int> calls{0};
    endpoint.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = 503;
            return;
        }
        res.set_content(R"({"completions": ["ok"]})", "application/json");
    });
    RemoteGenerator g(remote_spec(endpoint.url(), 2));
    EXPECT_EQ(g.sample(request("t", 1)), (std::vector<std::string>{"ok"}));
    EXPECT_EQ(calls, 3);
}

TEST(RemoteGeneratorTest, ExhaustedRetriesReportAttempts) {
    FakeEndpoint endpoint;
    std::atomic<int> calls{0};
    endpoint.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 500;
    });
    RemoteGenerator g(remote_spec(endpoint.url(), 1));
    try {
        g.sample(request("t", 1));
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_EQ(e.attempts(), 2);
        EXPECT_EQ(calls, 2);
    }
}

TEST(RemoteGeneratorTest, ClientErrorsAreNotRetried) {
    FakeEndpoint endpoint;
    std::atomic<int> calls{0};
    endpoint.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 422;
    });
    RemoteGenerator g(remote_spec(endpoint.url(), 3));
    try {
        g.sample(request("t", 1));
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_EQ(e.attempts(), 1);
        EXPECT_EQ(calls, 1);
    }
}

TEST(RemoteGeneratorTest, MalformedRepliesAreTransportErrors) {
    FakeEndpoint endpoint;
    endpoint.server().Post("/wrong-n", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"completions": ["a"]})", "application/json");
    });
    endpoint.server().Post("/not-json", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("hello", "text/plain");
    });
    EXPECT_THROW(RemoteGenerator(remote_spec(endpoint.url("/wrong-n"))).sample(request("t", 2)), TransportError);
    EXPECT_THROW(RemoteGenerator(remote_spec(endpoint.url("/not-json"))).sample(request("t", 1)), TransportError);
}

TEST(RemoteGeneratorTest, UnreachableEndpointIsInfrastructureFailure) {
    int port;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    RemoteGenerator g(remote_spec("http://127.0.0.1:" + std::to_string(port) + "/x", 1));
    try {
        g.sample(request("t", 1));
        FAIL();
    } catch (const InfrastructureError& e) {
        EXPECT_NE(dynamic_cast<const TransportError*>(&e), nullptr);
    }
}

TEST(RemoteGeneratorTest, EndpointValidationAndEnvironmentFallback) {
    ::unsetenv("LETI_GEN_ENDPOINT");
    EXPECT_THROW(RemoteGenerator(remote_spec("")), ValidationError);
    EXPECT_THROW(RemoteGenerator(remote_spec("https://example.com/x")), ValidationError);
    EXPECT_THROW(RemoteGenerator(remote_spec("http://")), ValidationError);
    ::setenv("LETI_GEN_ENDPOINT", "http://localhost:9/gen", 1);
    RemoteGenerator g(remote_spec(""));
    ::unsetenv("LETI_GEN_ENDPOINT");
    EXPECT_EQ(g.host(), "http://localhost:9");
    EXPECT_EQ(g.path(), "/gen");
    EXPECT_EQ(RemoteGenerator(remote_spec("http://h:1")).path(), "/");
}

// ---------------------------------------------------------------- factory

TEST(GeneratorSpecTest, ValidationAndKindNames) {
    GeneratorSpec spec;
    EXPECT_NO_THROW(spec.validate());
    spec.max_new_tokens = 0;
    EXPECT_THROW(spec.validate(), ValidationError);
    spec = GeneratorSpec{};
    spec.kind = GeneratorKind::Mock;
    EXPECT_THROW(spec.validate(), ValidationError);
    EXPECT_EQ(parse_generator_kind("trigram"), GeneratorKind::Trigram);
    EXPECT_EQ(to_string(GeneratorKind::Remote), "remote");
    EXPECT_THROW(parse_generator_kind("gpt"), ValidationError);
}

TEST(MakeGeneratorTest, BuildsEachKindWithRelativePaths) {
    testing::TempDir dir;
    write_file(dir / "mock.json", R"([{"prompt": "p", "completions": ["z"]}])");
    TrigramState s;
    s.fit(std::vector<std::string>{"p<|sol|>q"}, 1);
    save_trigram_state(dir / "state.json", s);
    EXPECT_EQ(load_trigram_state(dir / "state.json"), s);

    GeneratorSpec mock;
    mock.kind = GeneratorKind::Mock;
    mock.mock_table = "mock.json";
    EXPECT_EQ(make_generator(mock, dir.path())->sample(request("p", 1)).front(), "z");

    GeneratorSpec tri;
    tri.state_path = "state.json";
    const auto g = make_generator(tri, dir.path());
    EXPECT_EQ(g->kind(), GeneratorKind::Trigram);
    EXPECT_EQ(g->sample(request("p", 1, std::nullopt, 0.0)).front(), "q");

    GeneratorSpec fresh;
    EXPECT_EQ(make_generator(fresh)->kind(), GeneratorKind::Trigram);

    EXPECT_EQ(make_generator(remote_spec("http://127.0.0.1:9/g"))->kind(), GeneratorKind::Remote);
    write_file(dir / "broken.json", "{");
    tri.state_path = "broken.json";
    EXPECT_THROW(make_generator(tri, dir.path()), ParseError);
}

}  // namespace
}  // namespace leti
