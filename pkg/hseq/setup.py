import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

# import ``__version__`` from code base
exec(open('hseq/version.py').read())

setuptools.setup(
    name="hseq",
    version=__version__,
    description="Hierarchical coarse-to-fine sequence-to-sequence translation of long sentences",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=['hseq'],
    python_requires='>=3.9',
    install_requires=['tensorflow==2.15.1', 'numpy==1.26.4', 'pandas==2.1.4'],
    tests_require=['pytest', 'pandas', 'numpy'],
    setup_requires=['pytest-runner', "pytest"],
    entry_points={'console_scripts': ['hseq=hseq.cli:main']},
    zip_safe=True,
    keywords='Neural machine translation, sequence to sequence, attention, long sentences',
    classifiers=[
        "Development Status :: 4 - Beta",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Operating System :: OS Independent",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Topic :: Text Processing :: Linguistic",
    ],

)
