#pragma once

#include <string>
#include <utility>
#include <vector>

#include "intervene/corpus.hpp"

namespace testing {

using namespace intervene;

/// (role, ts, text) shorthand for building threads by hand.
struct Item {
    AuthorRole role;
    Timestamp ts;
    std::string text;
    std::vector<Item> comments = {};
};

inline Post make_post(const Item& item, std::size_t index) {
    Post p{"p" + std::to_string(index), item.role, item.ts, item.text, {}};
    for (std::size_t c = 0; c < item.comments.size(); ++c) {
        const auto& ci = item.comments[c];
        p.comments.push_back({"c" + std::to_string(index) + "_" + std::to_string(c), ci.role, ci.ts, ci.text});
    }
    return p;
}

inline Thread make_thread(std::string course, std::string id, ForumType type, std::string title,
                          const std::vector<Item>& posts) {
    Thread t{std::move(id), std::move(course), type, std::move(title), {}};
    for (std::size_t i = 0; i < posts.size(); ++i) t.posts.push_back(make_post(posts[i], i));
    return t;
}

constexpr auto S = AuthorRole::Student;
constexpr auto T = AuthorRole::Staff;

}  // namespace testing
