#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "polypersona/hash.hpp"
#include "polypersona/text.hpp"

using namespace polypersona;
using Tokens = std::vector<std::string>;

TEST_CASE("sha256_hex known digests", "[hash]") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("stable_id separates parts", "[hash]") {
    CHECK(stable_id("p-", "ab", "c") != stable_id("p-", "a", "bc"));
    CHECK(stable_id("p-", "x") == stable_id("p-", "x"));
    CHECK(stable_id("r-", "x").size() == 2 + 16);
}

TEST_CASE("tokenize examples", "[text]") {
    CHECK(tokenize("The cat sat.") == Tokens{"the", "cat", "sat"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("Yes—definitely!") == Tokens{"yes", "definitely"});
    CHECK(tokenize("  multiple   spaces\tand\nnewlines ") == Tokens{"multiple", "spaces", "and", "newlines"});
}

TEST_CASE("tokenize handles non-ASCII text", "[text]") {
    CHECK(tokenize("Café ÜBER naïve") == Tokens{"café", "über", "naïve"});
    // Invalid UTF-8 must not throw.
    const std::string bad = std::string("ok ") + static_cast<char>(0xff) + " fine";
    CHECK_NOTHROW(tokenize(bad));
}

TEST_CASE("utf8 length counts code points", "[text]") {
    CHECK(utf8::length("") == 0);
    CHECK(utf8::length("abc") == 3);
    CHECK(utf8::length("日本") == 2);
    CHECK(utf8::length("é") == 1);
}

TEST_CASE("trim, split, join", "[text]") {
    CHECK(trim("  x y \n") == "x y");
    CHECK(split("a | b|c", '|') == Tokens{"a", "b", "c"});
    CHECK(join({"a", "b"}, ", ") == "a, b");
}
