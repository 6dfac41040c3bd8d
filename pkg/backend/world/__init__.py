# World package
