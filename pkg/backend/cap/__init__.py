# CAP package
