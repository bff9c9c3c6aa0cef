#!/usr/bin/python3

from .runner import main

if __name__ == "__main__":
    main()
