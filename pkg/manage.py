#!/usr/bin/env python
"""Django 관리 명령 - blindspot 명령과 같은 진입점 (migrate, run, compare, render ...)"""
import sys

from main import main

if __name__ == "__main__":
    main(sys.argv)
